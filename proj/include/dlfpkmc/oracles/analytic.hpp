#ifndef DLFPKMC_ORACLES_ANALYTIC_HPP
#define DLFPKMC_ORACLES_ANALYTIC_HPP

// Closed-form reference solution for two molecules with V = 0 on [0, L]
// with reflecting walls, reacting at separation r_R, both started uniform.
// Rotating coordinates by 45 degrees maps the pair problem to absorption
// of a single point on a square of side l = sqrt(2)(L-r_R); the rotation
// is an isometry, so each axis keeps the per-molecule coefficient D.
// Everything below is an eigenfunction expansion on that square.

namespace fpkmc::analytic {

struct TwoMoleculeSpec {
  double length = 1.0;
  double diffusion = 1.0;  // per molecule; both molecules identical
  double reaction_radius = 0.02;
};

// Probability that the pair has not reacted by time t. Exact at t = 0
// (geometric mass off the reacted strip); series otherwise, truncated
// when the next term falls below 1e-14 relative.
double survival(const TwoMoleculeSpec& spec, double t);

// Mean reaction time via the tanh form of the series, truncated to
// 1e-12 absolute.
double mean_reaction_time(const TwoMoleculeSpec& spec);

// Same quantity via the double-sum form; independent evaluation used to
// cross-check mean_reaction_time to 1e-10.
double mean_reaction_time_double_sum(const TwoMoleculeSpec& spec);

// Unnormalized CDF of the reaction location for reactions at t > 0,
// parameterized by the physical midpoint q = (Q_A + Q_B)/2 which ranges
// over [r_R/2, L - r_R/2]. The total mass equals survival(0): every pair
// that survives placement eventually reacts. Values outside the physical
// range clamp to the endpoints.
double reaction_location_cdf(const TwoMoleculeSpec& spec, double q);

// Side length of the transformed square domain.
double square_side(const TwoMoleculeSpec& spec);

// Smallest t with survival(t) <= s (bisection; s >= survival(0) gives 0).
double survival_inverse(const TwoMoleculeSpec& spec, double s);

}  // namespace fpkmc::analytic

#endif

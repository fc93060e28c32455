#ifndef DLFPKMC_ORACLES_FOKKER_PLANCK_HPP
#define DLFPKMC_ORACLES_FOKKER_PLANCK_HPP

// Finite-difference solver for the two-molecule survival problem: the
// pair density rho(x, y, t) on the triangle {0 <= x, y <= L, y - x > r_R}
// (the other triangle follows by symmetry), absorbed on the diagonal
// y - x = r_R, reflected at x = 0 and y = L. The spatial operator is the
// tensor sum of 1D WPE jump generators, so its stationary density is the
// discrete Gibbs-Boltzmann distribution exactly.

#include <cstddef>
#include <memory>
#include <vector>

#include "dlfpkmc/potential.hpp"

namespace fpkmc::fp {

struct PairPdeSpec {
  double length = 1.0;
  double diffusion = 1.0;  // per molecule; both molecules identical
  double reaction_radius = 0.02;
  double dx = 0.005;  // must divide both reaction_radius and length
  PotentialField potential;  // per molecule
};

enum class Stepper { CrankNicolson, Tga };

struct SurvivalCurve {
  std::vector<double> t;
  std::vector<double> s;
};

// Joint occupation probabilities captured when S(t) first crosses a level:
// p is the full n_bins x n_bins grid (row-major, P(A in bin i, B in bin j)),
// reacted = 1 - survival.
struct BinnedCapture {
  double level = 0.0;
  double time = 0.0;
  double survival = 0.0;
  std::vector<double> p;
  double reacted = 0.0;
};

class PairPde {
 public:
  explicit PairPde(const PairPdeSpec& spec);

  std::size_t n_nodes() const;
  double survival0() const;

  // <T> = 2 * sum(w) where the generator applied to w balances the initial
  // mass; one symmetric positive-definite solve, no time stepping.
  double stationary_mean_time() const;

  // Fixed-step run from t = 0 recording S after every step.
  SurvivalCurve run(Stepper stepper, double dt, double t_end) const;

  // The production schedule: TGA with dt = dx^2 on [0, t_switch], then
  // Crank-Nicolson with dt_cn until S <= s_floor or t >= t_max. Captures
  // bin snapshots at the first crossings of capture_levels when given.
  SurvivalCurve run_hybrid(double t_switch, double dt_cn, double s_floor,
                           double t_max,
                           const std::vector<double>& capture_levels = {},
                           int n_bins = 5,
                           std::vector<BinnedCapture>* captures =
                               nullptr) const;

  // Residual of the discrete Gibbs-Boltzmann density under the
  // pure-reflecting variant of the operator (no absorbing diagonal),
  // normalized by the largest out-rate times the largest mass.
  static double equilibrium_residual(const PairPdeSpec& spec);

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

// Trapezoid integral of S over the curve plus an exponential tail
// extrapolated from the last decade of decay.
double mean_time_from_curve(const SurvivalCurve& curve);

}  // namespace fpkmc::fp

#endif

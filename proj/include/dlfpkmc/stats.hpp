// Error metrics for comparing empirical reaction statistics against
// reference curves: empirical survival with confidence bands, discrete Lp
// norms, KL divergence over reaction-time bins, joint spatial occupancy
// probabilities, and convergence-order fits.
#ifndef DLFPKMC_STATS_HPP
#define DLFPKMC_STATS_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "dlfpkmc/path.hpp"

namespace fpkmc::stats {

// Survival estimate S(t) = fraction of samples > t, evaluated at the sorted
// unique sample values and linearly interpolated onto the requested grid;
// 1 before the smallest sample, 0 at and beyond the largest.  Bands are
// 99% pointwise normal intervals with the binomial (Greenwood, uncensored)
// variance S(1-S)/n, clamped to [0, 1].
struct EmpiricalCdf {
  std::vector<double> grid;
  std::vector<double> estimate;
  std::vector<double> lower;
  std::vector<double> upper;
};
EmpiricalCdf empirical_survival(std::vector<double> samples,
                                const std::vector<double>& grid);

// Discrete norms on a shared grid: p = 1 and 2 use left-endpoint weights
// dt_i = t_{i+1} - t_i; p = infinity is the plain maximum over grid points
// (the Kolmogorov distance when f and g are CDFs).
double lp_distance(const std::vector<double>& f, const std::vector<double>& g,
                   const std::vector<double>& grid, double p);
// Same, divided by ||f|| (the first argument is the reference).
double relative_lp_distance(const std::vector<double>& f,
                            const std::vector<double>& g,
                            const std::vector<double>& grid, double p);

// Bins with shared edges; `mass` may carry one trailing extra bin with no
// edges of its own (reacted mass, or the t > t_cut tail).
struct BinnedDistribution {
  std::vector<double> edges;
  std::vector<double> mass;
  bool has_extra = false;
};

// Sum of F ln(F/G) over bins, 0 ln(0/x) = 0; +infinity when G vanishes on
// a bin where F does not.  Bin layouts must match.
double kl_divergence(const BinnedDistribution& truth,
                     const BinnedDistribution& approx);

// Reaction-time binning: n_even equal bins on [0, t_cut] plus one tail bin
// for t > t_cut.  Masses are sample fractions and sum to 1.
BinnedDistribution bin_reaction_times(const std::vector<double>& samples,
                                      int n_even, double t_cut);

// The same bins filled from a survival function, S(0-) = 1, so any atom at
// t = 0 lands in the first bin; the tail bin carries S(t_cut).
BinnedDistribution bin_from_survival(
    const std::function<double(double)>& survival, int n_even, double t_cut);

// Joint occupancy of (Q_A, Q_B) over n_x * n_x equal cells of [0, length]^2
// (row-major mass layout, edges shared by both axes) plus the extra reacted
// bin.  Each surviving pair and each reacted realization weighs 1/total.
BinnedDistribution joint_spatial_probs(
    const std::vector<std::array<double, 2>>& surviving_pairs,
    std::size_t n_reacted, int n_x, double length);

// L1 distance between matching bin layouts, and its relative form divided
// by the total |mass| of the first argument.
double binned_l1(const BinnedDistribution& a, const BinnedDistribution& b);
double relative_binned_l1(const BinnedDistribution& truth,
                          const BinnedDistribution& approx);

// Least-squares slope of log(error) against log(width).  Points with
// non-positive (or non-finite) error sit at the statistical noise floor
// and are excluded and reported.
struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t n_used = 0;
  std::vector<std::size_t> excluded;
};
OrderFit convergence_order(const std::vector<double>& widths,
                           const std::vector<double>& errors);

// Sample mean with symmetric 99% normal-approximation interval (z = 2.576).
struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
  std::size_t n = 0;
};
MeanCi mean_ci(const std::vector<double>& samples);

// Relative error |exact - mean| / |exact| with the statistical half-width
// in the same units; resolved_to_noise marks differences smaller than the
// half-width (not distinguishable from sampling error).
struct RelativeError {
  double value = 0.0;
  double half_width = 0.0;
  bool resolved_to_noise = false;
};
RelativeError relative_error_with_bars(double exact, const MeanCi& empirical);

// Smallest sample value t with fraction(samples > t) <= level.
double survival_quantile(std::vector<double> samples, double level);

// Mean mesh width weighted by use counts.
double use_weighted_mean_width(const WidthTally& tally);

}  // namespace fpkmc::stats

#endif  // DLFPKMC_STATS_HPP

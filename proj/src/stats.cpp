#include "dlfpkmc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fpkmc::stats {

namespace {

constexpr double kBandZ = 2.5758293035489;  // 99% two-sided normal quantile

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys,
                   double x, double before, double after) {
  if (x < xs.front()) return before;
  if (x >= xs.back()) return after;
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin());
  // xs[i-1] <= x < xs[i]
  const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + w * (ys[i] - ys[i - 1]);
}

void require_same_layout(const BinnedDistribution& a,
                         const BinnedDistribution& b) {
  if (a.edges.size() != b.edges.size() || a.mass.size() != b.mass.size() ||
      a.has_extra != b.has_extra)
    throw std::invalid_argument("bin layouts differ");
  for (std::size_t i = 0; i < a.edges.size(); ++i)
    if (std::abs(a.edges[i] - b.edges[i]) >
        1e-12 * std::max(1.0, std::abs(a.edges[i])))
      throw std::invalid_argument("bin edges differ");
}

}  // namespace

EmpiricalCdf empirical_survival(std::vector<double> samples,
                                const std::vector<double>& grid) {
  if (samples.size() < 2)
    throw std::invalid_argument("need at least two samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());

  // Knots: unique sample values; S at a knot counts samples strictly above.
  std::vector<double> kt, ks, klo, khi;
  for (std::size_t i = 0; i < samples.size();) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    const double s = static_cast<double>(samples.size() - j) / n;
    const double half = kBandZ * std::sqrt(s * (1.0 - s) / n);
    kt.push_back(samples[i]);
    ks.push_back(s);
    klo.push_back(std::max(0.0, s - half));
    khi.push_back(std::min(1.0, s + half));
    i = j;
  }

  EmpiricalCdf out;
  out.grid = grid;
  out.estimate.reserve(grid.size());
  out.lower.reserve(grid.size());
  out.upper.reserve(grid.size());
  for (double t : grid) {
    out.estimate.push_back(interpolate(kt, ks, t, 1.0, 0.0));
    out.lower.push_back(interpolate(kt, klo, t, 1.0, 0.0));
    out.upper.push_back(interpolate(kt, khi, t, 1.0, 0.0));
  }
  return out;
}

double lp_distance(const std::vector<double>& f, const std::vector<double>& g,
                   const std::vector<double>& grid, double p) {
  if (f.size() != g.size() || f.size() != grid.size())
    throw std::invalid_argument("grids differ");
  if (grid.size() < 2) throw std::invalid_argument("grid too small");
  if (std::isinf(p)) {
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      worst = std::max(worst, std::abs(f[i] - g[i]));
    return worst;
  }
  if (p != 1.0 && p != 2.0)
    throw std::invalid_argument("p must be 1, 2, or infinity");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double dt = grid[i + 1] - grid[i];
    const double d = std::abs(f[i] - g[i]);
    acc += (p == 1.0 ? d : d * d) * dt;
  }
  return p == 1.0 ? acc : std::sqrt(acc);
}

double relative_lp_distance(const std::vector<double>& f,
                            const std::vector<double>& g,
                            const std::vector<double>& grid, double p) {
  const std::vector<double> zeros(f.size(), 0.0);
  const double denom = lp_distance(f, zeros, grid, p);
  if (!(denom > 0.0)) throw std::invalid_argument("reference norm is zero");
  return lp_distance(f, g, grid, p) / denom;
}

double kl_divergence(const BinnedDistribution& truth,
                     const BinnedDistribution& approx) {
  require_same_layout(truth, approx);
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.mass.size(); ++i) {
    const double fi = truth.mass[i];
    if (fi <= 0.0) continue;
    if (approx.mass[i] <= 0.0)
      return std::numeric_limits<double>::infinity();
    acc += fi * std::log(fi / approx.mass[i]);
  }
  return acc;
}

BinnedDistribution bin_reaction_times(const std::vector<double>& samples,
                                      int n_even, double t_cut) {
  if (n_even < 1 || !(t_cut > 0.0))
    throw std::invalid_argument("bad reaction-time binning");
  BinnedDistribution out;
  out.has_extra = true;
  out.edges.resize(n_even + 1);
  for (int i = 0; i <= n_even; ++i) out.edges[i] = t_cut * i / n_even;
  out.mass.assign(n_even + 1, 0.0);
  const double w = samples.empty() ? 1.0 : 1.0 / samples.size();
  for (double t : samples) {
    if (t > t_cut) {
      out.mass[n_even] += w;
    } else {
      const int i = std::min<int>(static_cast<int>(t / t_cut * n_even),
                                  n_even - 1);
      out.mass[i] += w;
    }
  }
  return out;
}

BinnedDistribution bin_from_survival(
    const std::function<double(double)>& survival, int n_even, double t_cut) {
  if (n_even < 1 || !(t_cut > 0.0))
    throw std::invalid_argument("bad reaction-time binning");
  BinnedDistribution out;
  out.has_extra = true;
  out.edges.resize(n_even + 1);
  for (int i = 0; i <= n_even; ++i) out.edges[i] = t_cut * i / n_even;
  out.mass.assign(n_even + 1, 0.0);
  double prev = 1.0;  // S(0-): any atom at t = 0 belongs to the first bin
  for (int i = 0; i < n_even; ++i) {
    const double next = survival(out.edges[i + 1]);
    out.mass[i] = std::max(0.0, prev - next);
    prev = next;
  }
  out.mass[n_even] = std::max(0.0, prev);
  return out;
}

BinnedDistribution joint_spatial_probs(
    const std::vector<std::array<double, 2>>& surviving_pairs,
    std::size_t n_reacted, int n_x, double length) {
  if (n_x < 1 || !(length > 0.0))
    throw std::invalid_argument("bad joint binning");
  BinnedDistribution out;
  out.has_extra = true;
  out.edges.resize(n_x + 1);
  for (int i = 0; i <= n_x; ++i) out.edges[i] = length * i / n_x;
  out.mass.assign(static_cast<std::size_t>(n_x) * n_x + 1, 0.0);
  const std::size_t total = surviving_pairs.size() + n_reacted;
  if (total == 0) return out;
  const double w = 1.0 / static_cast<double>(total);
  const auto cell = [&](double q) {
    return std::min<int>(static_cast<int>(q / length * n_x), n_x - 1);
  };
  for (const auto& pr : surviving_pairs)
    out.mass[static_cast<std::size_t>(cell(pr[0])) * n_x + cell(pr[1])] += w;
  out.mass.back() = static_cast<double>(n_reacted) * w;
  return out;
}

double binned_l1(const BinnedDistribution& a, const BinnedDistribution& b) {
  require_same_layout(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.mass.size(); ++i)
    acc += std::abs(a.mass[i] - b.mass[i]);
  return acc;
}

double relative_binned_l1(const BinnedDistribution& truth,
                          const BinnedDistribution& approx) {
  double denom = 0.0;
  for (double m : truth.mass) denom += std::abs(m);
  if (!(denom > 0.0)) throw std::invalid_argument("reference mass is zero");
  return binned_l1(truth, approx) / denom;
}

OrderFit convergence_order(const std::vector<double>& widths,
                           const std::vector<double>& errors) {
  if (widths.size() != errors.size())
    throw std::invalid_argument("widths and errors differ in length");
  if (widths.size() < 3)
    throw std::invalid_argument("need at least three points");
  OrderFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (!(widths[i] > 0.0))
      throw std::invalid_argument("widths must be positive");
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i])) {
      fit.excluded.push_back(i);
      continue;
    }
    const double x = std::log(widths[i]);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++fit.n_used;
  }
  if (fit.n_used < 2) {
    fit.slope = fit.intercept = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  const double n = static_cast<double>(fit.n_used);
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

MeanCi mean_ci(const std::vector<double>& samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("need at least two samples");
  MeanCi out;
  out.n = samples.size();
  double sum = 0.0;
  for (double x : samples) sum += x;
  out.mean = sum / static_cast<double>(out.n);
  double ss = 0.0;
  for (double x : samples) ss += (x - out.mean) * (x - out.mean);
  const double var = ss / static_cast<double>(out.n - 1);
  out.half_width = 2.576 * std::sqrt(var / static_cast<double>(out.n));
  return out;
}

RelativeError relative_error_with_bars(double exact, const MeanCi& empirical) {
  if (exact == 0.0) throw std::invalid_argument("exact value is zero");
  RelativeError out;
  const double diff = std::abs(exact - empirical.mean);
  out.value = diff / std::abs(exact);
  out.half_width = empirical.half_width / std::abs(exact);
  out.resolved_to_noise = diff < empirical.half_width;
  return out;
}

double survival_quantile(std::vector<double> samples, double level) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  if (!(level > 0.0) || !(level < 1.0))
    throw std::invalid_argument("level must lie in (0, 1)");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  // fraction(> samples[k]) = (n-1-k)/n <= level  <=>  k >= n(1-level) - 1
  const auto k = static_cast<std::size_t>(
      std::max(0.0, std::ceil(n * (1.0 - level) - 1.0)));
  return samples[std::min(k, samples.size() - 1)];
}

double use_weighted_mean_width(const WidthTally& tally) {
  double weighted = 0.0;
  std::uint64_t uses = 0;
  for (const auto& [width, count] : tally.entries()) {
    weighted += width * static_cast<double>(count);
    uses += count;
  }
  if (uses == 0) throw std::invalid_argument("tally is empty");
  return weighted / static_cast<double>(uses);
}

}  // namespace fpkmc::stats

#include "dlfpkmc/oracles/fokker_planck.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dlfpkmc/wpe_rates.hpp"

namespace fpkmc::fp {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Solver =
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper>;

// Crank-Nicolson undershoots near the absorbing diagonal while the initial
// discontinuity relaxes; the non-negativity guard only arms after this
// window (the TGA switch time), where a violation really means instability.
constexpr double kStartupWindow = 0.07;

int exact_multiple(double whole, double part, const char* what) {
  const double q = whole / part;
  const long k = std::lround(q);
  if (k < 1 || std::fabs(q - static_cast<double>(k)) > 1e-9 * q)
    throw std::invalid_argument(std::string("dx must divide ") + what);
  return static_cast<int>(k);
}

// Per-axis fractional bin assignment for one node: a cell centered on a
// bin edge splits half-half; wall half-cells lie entirely inside their bin.
struct BinFrac {
  int bin[2];
  double frac[2];
  int n;
};

BinFrac bin_fractions(double x, double bin_width, int n_bins) {
  BinFrac out{};
  const double r = x / bin_width;
  const long k = std::lround(r);
  if (k > 0 && k < n_bins && std::fabs(r - static_cast<double>(k)) < 1e-9) {
    out.n = 2;
    out.bin[0] = static_cast<int>(k) - 1;
    out.bin[1] = static_cast<int>(k);
    out.frac[0] = out.frac[1] = 0.5;
    return out;
  }
  out.n = 1;
  out.bin[0] = std::min(std::max(static_cast<int>(std::floor(r)), 0),
                        n_bins - 1);
  out.frac[0] = 1.0;
  return out;
}

}  // namespace

struct PairPde::Impl {
  PairPdeSpec spec;
  int nx = 0;  // grid points 0..nx along each axis
  int m = 0;   // reaction radius in grid units
  std::vector<int> row_off;  // node index offset per x-index
  std::vector<double> v;     // potential at grid points
  SpMat gen;                 // symmetrized generator
  Vec s;                     // similarity scale sqrt(cell * exp(-U))
  Vec y0;                    // initial masses / s

  int node(int i, int j) const { return row_off[i] + (j - (i + m + 1)); }
  bool live(int i, int j) const {
    return i >= 0 && j <= nx && j - i >= m + 1;
  }

  double survival_of(const Vec& y) const { return 2.0 * s.dot(y); }

  void check_density(const Vec& y, double t) const {
    if (t <= kStartupWindow) return;  // CN start-up undershoot is expected
    const double dx = spec.length / nx;
    for (int i = 0; i + m + 1 <= nx; ++i) {
      const double wx = (i == 0) ? 0.5 * dx : dx;
      for (int j = i + m + 1; j <= nx; ++j) {
        const double wy = (j == nx) ? 0.5 * dx : dx;
        const double mass = s[node(i, j)] * y[node(i, j)];
        if (mass < -1e-10 * wx * wy)
          throw std::runtime_error(
              "solver instability: negative density at t = " +
              std::to_string(t));
      }
    }
  }

  std::vector<double> bin_masses(const Vec& y, int n_bins) const {
    const double dx = spec.length / nx;
    const double bw = spec.length / n_bins;
    std::vector<double> tri(static_cast<std::size_t>(n_bins) * n_bins, 0.0);
    for (int i = 0; i + m + 1 <= nx; ++i) {
      const BinFrac fx = bin_fractions(i * dx, bw, n_bins);
      for (int j = i + m + 1; j <= nx; ++j) {
        const double q = s[node(i, j)] * y[node(i, j)];
        const BinFrac fy = bin_fractions(j * dx, bw, n_bins);
        for (int a = 0; a < fx.n; ++a)
          for (int b = 0; b < fy.n; ++b)
            tri[static_cast<std::size_t>(fx.bin[a]) * n_bins + fy.bin[b]] +=
                q * fx.frac[a] * fy.frac[b];
      }
    }
    // The triangle holds the ordered-pair mass for x < y; the full joint
    // distribution of (Q_A, Q_B) adds the mirrored triangle.
    std::vector<double> full(tri.size());
    for (int a = 0; a < n_bins; ++a)
      for (int b = 0; b < n_bins; ++b)
        full[static_cast<std::size_t>(a) * n_bins + b] =
            tri[static_cast<std::size_t>(a) * n_bins + b] +
            tri[static_cast<std::size_t>(b) * n_bins + a];
    return full;
  }
};

PairPde::PairPde(const PairPdeSpec& spec) {
  auto impl = std::make_shared<Impl>();
  impl->spec = spec;
  if (!(spec.length > 0.0) || !(spec.diffusion > 0.0) ||
      !(spec.dx > 0.0) || !(spec.reaction_radius > 0.0) ||
      !(spec.reaction_radius < spec.length))
    throw std::invalid_argument("pair PDE spec out of range");
  impl->nx = exact_multiple(spec.length, spec.dx, "the domain length");
  impl->m = exact_multiple(spec.reaction_radius, spec.dx,
                           "the reaction radius");
  const int nx = impl->nx, m = impl->m;
  if (m + 1 > nx)
    throw std::invalid_argument("no interior nodes above the diagonal");
  const double dx = spec.length / nx;
  const double D = spec.diffusion;

  impl->v.resize(nx + 1);
  for (int i = 0; i <= nx; ++i) impl->v[i] = spec.potential(i * dx);

  impl->row_off.assign(nx + 2, 0);
  int count = 0;
  for (int i = 0; i <= nx; ++i) {
    impl->row_off[i] = count;
    if (i + m + 1 <= nx) count += nx - (i + m + 1) + 1;
  }
  impl->row_off[nx + 1] = count;

  const auto cell_w = [&](int k, bool is_y) {
    const bool wall = is_y ? (k == nx) : (k == 0);
    return wall ? 0.5 * dx : dx;
  };

  impl->s.resize(count);
  impl->y0.resize(count);
  const double rho0 = 1.0 / (spec.length * spec.length);
  for (int i = 0; i + m + 1 <= nx; ++i) {
    for (int j = i + m + 1; j <= nx; ++j) {
      const int u = impl->node(i, j);
      const double cell = cell_w(i, false) * cell_w(j, true);
      impl->s[u] = std::sqrt(cell * std::exp(-impl->v[i] - impl->v[j]));
      impl->y0[u] = cell * rho0 / impl->s[u];
    }
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(count) * 5);
  std::vector<double> diag(count, 0.0);
  const auto& v = impl->v;
  for (int i = 0; i + m + 1 <= nx; ++i) {
    for (int j = i + m + 1; j <= nx; ++j) {
      const int u = impl->node(i, j);
      // x-right: doubled out-rate from the x = 0 wall half-cell
      {
        const double fwd = nonuniform_rate(D, dx, i == 0 ? 0.0 : dx,
                                           v[i], v[i + 1]);
        if (j - (i + 1) >= m + 1) {
          const int w = impl->node(i + 1, j);
          const double bwd = nonuniform_rate(D, dx, dx, v[i + 1], v[i]);
          const double off = fwd * impl->s[u] / impl->s[w];
          trips.emplace_back(w, u, off);
          trips.emplace_back(u, w, off);
          diag[u] -= fwd;
          diag[w] -= bwd;
        } else {
          diag[u] -= fwd;  // into the absorbing diagonal
        }
      }
      // y-up: reflecting at j = nx (no channel)
      if (j < nx) {
        const double fwd = nonuniform_rate(D, dx, dx, v[j], v[j + 1]);
        const double bwd = nonuniform_rate(D, dx, j + 1 == nx ? 0.0 : dx,
                                           v[j + 1], v[j]);
        const int w = impl->node(i, j + 1);
        const double off = fwd * impl->s[u] / impl->s[w];
        trips.emplace_back(w, u, off);
        trips.emplace_back(u, w, off);
        diag[u] -= fwd;
        diag[w] -= bwd;
      }
      // y-down into the absorbing diagonal (live targets are covered as
      // the y-up edge of the node below)
      if (j - i == m + 1) {
        diag[u] -= nonuniform_rate(D, dx, j == nx ? 0.0 : dx, v[j],
                                   v[j - 1]);
      }
      // x-left to a live node is the x-right edge of the left neighbor;
      // i = 0 has no leftward channel; the target can never be absorbed.
    }
  }
  for (int u = 0; u < count; ++u) trips.emplace_back(u, u, diag[u]);
  impl->gen.resize(count, count);
  impl->gen.setFromTriplets(trips.begin(), trips.end());
  impl_ = std::move(impl);
}

std::size_t PairPde::n_nodes() const {
  return static_cast<std::size_t>(impl_->s.size());
}

double PairPde::survival0() const { return impl_->survival_of(impl_->y0); }

double PairPde::stationary_mean_time() const {
  const Impl& im = *impl_;
  SpMat neg = -im.gen;
  Solver cg;
  cg.setTolerance(1e-12);
  cg.compute(neg);
  const Vec z = cg.solve(im.y0);
  if (cg.info() != Eigen::Success)
    throw std::runtime_error("stationary solve did not converge");
  return 2.0 * im.s.dot(z);
}

SurvivalCurve PairPde::run(Stepper stepper, double dt, double t_end) const {
  const Impl& im = *impl_;
  const int n = static_cast<int>(im.s.size());
  SurvivalCurve curve;
  Vec y = im.y0;
  curve.t.push_back(0.0);
  curve.s.push_back(im.survival_of(y));

  const SpMat ident = [n] {
    SpMat id(n, n);
    id.setIdentity();
    return id;
  }();

  if (stepper == Stepper::CrankNicolson) {
    const SpMat lhs = ident - (dt / 2.0) * im.gen;
    const SpMat rhs = ident + (dt / 2.0) * im.gen;
    Solver cg;
    cg.setTolerance(1e-12);
    cg.compute(lhs);
    double t = 0.0;
    while (t < t_end - 1e-12 * t_end) {
      const Vec b = rhs * y;
      y = cg.solveWithGuess(b, y);
      t += dt;
      im.check_density(y, t);
      curve.t.push_back(t);
      curve.s.push_back(im.survival_of(y));
    }
  } else {
    const double a = 2.0 - std::numbers::sqrt2 - 1e-8;
    const double disc = std::sqrt(a * a - 4.0 * a + 2.0);
    const double r1 = (a + disc) / 2.0, r2 = (a - disc) / 2.0;
    const SpMat lhs1 = ident - (r1 * dt) * im.gen;
    const SpMat lhs2 = ident - (r2 * dt) * im.gen;
    Solver cg1, cg2;
    cg1.setTolerance(1e-12);
    cg2.setTolerance(1e-12);
    cg1.compute(lhs1);
    cg2.compute(lhs2);
    double t = 0.0;
    while (t < t_end - 1e-12 * t_end) {
      const Vec b = y + ((1.0 - a) * dt) * (im.gen * y);
      const Vec y1 = cg1.solveWithGuess(b, y);
      y = cg2.solveWithGuess(y1, y1);
      t += dt;
      im.check_density(y, t);
      curve.t.push_back(t);
      curve.s.push_back(im.survival_of(y));
    }
  }
  return curve;
}

SurvivalCurve PairPde::run_hybrid(double t_switch, double dt_cn,
                                  double s_floor, double t_max,
                                  const std::vector<double>& capture_levels,
                                  int n_bins,
                                  std::vector<BinnedCapture>* captures)
    const {
  const Impl& im = *impl_;
  const int n = static_cast<int>(im.s.size());
  const double dx = im.spec.length / im.nx;
  const double dt_tga = dx * dx;

  std::vector<double> levels = capture_levels;
  std::sort(levels.begin(), levels.end(), std::greater<>());
  std::size_t next_level = 0;

  SurvivalCurve curve;
  Vec y = im.y0;
  Vec y_prev = y;
  double t = 0.0;
  curve.t.push_back(0.0);
  curve.s.push_back(im.survival_of(y));

  const SpMat ident = [n] {
    SpMat id(n, n);
    id.setIdentity();
    return id;
  }();

  const auto handle_captures = [&](double t_old, double dt) {
    if (!captures || next_level >= levels.size()) return;
    const double s_old = im.survival_of(y_prev);
    const double s_new = im.survival_of(y);
    while (next_level < levels.size() && s_new <= levels[next_level] &&
           s_old > levels[next_level]) {
      const double lv = levels[next_level];
      const double theta = (s_old - lv) / (s_old - s_new);
      Vec blend = (1.0 - theta) * y_prev + theta * y;
      BinnedCapture cap;
      cap.level = lv;
      cap.time = t_old + theta * dt;
      cap.survival = im.survival_of(blend);
      cap.p = im.bin_masses(blend, n_bins);
      cap.reacted = 1.0 - cap.survival;
      captures->push_back(std::move(cap));
      ++next_level;
    }
  };

  // Damped start-up phase.
  {
    const double a = 2.0 - std::numbers::sqrt2 - 1e-8;
    const double disc = std::sqrt(a * a - 4.0 * a + 2.0);
    const double r1 = (a + disc) / 2.0, r2 = (a - disc) / 2.0;
    const SpMat lhs1 = ident - (r1 * dt_tga) * im.gen;
    const SpMat lhs2 = ident - (r2 * dt_tga) * im.gen;
    Solver cg1, cg2;
    cg1.setTolerance(1e-12);
    cg2.setTolerance(1e-12);
    cg1.compute(lhs1);
    cg2.compute(lhs2);
    while (t < t_switch - 0.5 * dt_tga && t < t_max &&
           curve.s.back() > s_floor) {
      y_prev = y;
      const Vec b = y + ((1.0 - a) * dt_tga) * (im.gen * y);
      const Vec y1 = cg1.solveWithGuess(b, y);
      y = cg2.solveWithGuess(y1, y1);
      handle_captures(t, dt_tga);
      t += dt_tga;
      im.check_density(y, t);
      curve.t.push_back(t);
      curve.s.push_back(im.survival_of(y));
    }
  }
  // Long-time phase.
  {
    const SpMat lhs = ident - (dt_cn / 2.0) * im.gen;
    const SpMat rhs = ident + (dt_cn / 2.0) * im.gen;
    Solver cg;
    cg.setTolerance(1e-12);
    cg.compute(lhs);
    while (t < t_max && curve.s.back() > s_floor) {
      y_prev = y;
      const Vec b = rhs * y;
      y = cg.solveWithGuess(b, y);
      handle_captures(t, dt_cn);
      t += dt_cn;
      im.check_density(y, t);
      curve.t.push_back(t);
      curve.s.push_back(im.survival_of(y));
    }
  }
  return curve;
}

double PairPde::equilibrium_residual(const PairPdeSpec& spec) {
  // Pure-reflecting operator on the full square grid: every wall gets the
  // half-cell doubling, there is no absorbing diagonal, and the discrete
  // Gibbs-Boltzmann masses must be a fixed point.
  const int nx = exact_multiple(spec.length, spec.dx, "the domain length");
  const double dx = spec.length / nx;
  const double D = spec.diffusion;
  std::vector<double> v(nx + 1);
  for (int i = 0; i <= nx; ++i) v[i] = spec.potential(i * dx);
  const auto cw = [&](int k) { return (k == 0 || k == nx) ? 0.5 * dx : dx; };
  const auto rate = [&](int from, int to) {
    // 1D WPE rate along one axis; h_other = 0 doubles wall-node out-rates.
    const int back = 2 * from - to;
    const double h_other = (back < 0 || back > nx) ? 0.0 : dx;
    return nonuniform_rate(D, dx, h_other, v[from], v[to]);
  };

  const auto idx = [&](int i, int j) { return i * (nx + 1) + j; };
  const int n = (nx + 1) * (nx + 1);
  std::vector<double> q(n), res(n, 0.0);
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= nx; ++j)
      q[idx(i, j)] = cw(i) * cw(j) * std::exp(-v[i] - v[j]);

  double max_out = 0.0, max_q = 0.0;
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j <= nx; ++j) {
      const int u = idx(i, j);
      max_q = std::max(max_q, q[u]);
      double out = 0.0;
      const int ni[4] = {i - 1, i + 1, i, i};
      const int nj[4] = {j, j, j - 1, j + 1};
      for (int c = 0; c < 4; ++c) {
        if (ni[c] < 0 || ni[c] > nx || nj[c] < 0 || nj[c] > nx) continue;
        const double r = c < 2 ? rate(i, ni[c]) : rate(j, nj[c]);
        out += r;
        res[idx(ni[c], nj[c])] += r * q[u];
      }
      res[u] -= out * q[u];
      max_out = std::max(max_out, out);
    }
  }
  double max_res = 0.0;
  for (double r : res) max_res = std::max(max_res, std::fabs(r));
  return max_res / (max_out * max_q);
}

double mean_time_from_curve(const SurvivalCurve& curve) {
  const auto& t = curve.t;
  const auto& s = curve.s;
  if (t.size() < 2) throw std::invalid_argument("curve too short");
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i)
    integral += 0.5 * (s[i] + s[i + 1]) * (t[i + 1] - t[i]);
  // Exponential tail: fit the decay rate over the last decade of S.
  const double s_end = s.back();
  if (s_end > 0.0) {
    std::size_t k = t.size() - 1;
    while (k > 0 && s[k - 1] < 10.0 * s_end && s[k - 1] > s_end) --k;
    if (k < t.size() - 1 && s[k] > s_end) {
      const double lambda =
          std::log(s[k] / s_end) / (t.back() - t[k]);
      if (lambda > 0.0) integral += s_end / lambda;
    }
  }
  return integral;
}

}  // namespace fpkmc::fp

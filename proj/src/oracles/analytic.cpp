#include "dlfpkmc/oracles/analytic.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fpkmc::analytic {

namespace {

constexpr double kPi = std::numbers::pi;

void validate(const TwoMoleculeSpec& spec) {
  if (!(spec.length > 0.0) || !(spec.diffusion > 0.0) ||
      !(spec.reaction_radius > 0.0) ||
      !(spec.reaction_radius < spec.length))
    throw std::invalid_argument("two-molecule spec out of range");
}

// Constant initial density on the square: the physical IC is 1/L^2 on the
// unit square, and the rotation to the square of side l is isometric, so
// the density carried over is still 1/L^2; the factor 1/2 accounts for
// the two congruent triangles mapping onto one square.
double rho0(const TwoMoleculeSpec& spec) {
  return 0.5 / (spec.length * spec.length);
}

}  // namespace

double square_side(const TwoMoleculeSpec& spec) {
  return std::numbers::sqrt2 * (spec.length - spec.reaction_radius);
}

double survival(const TwoMoleculeSpec& spec, double t) {
  validate(spec);
  if (!(t >= 0.0)) throw std::invalid_argument("t must be >= 0");
  const double l = square_side(spec);
  const double mass0 = rho0(spec) * l * l;
  if (t == 0.0) return mass0;

  const double decay = kPi * kPi * spec.diffusion * t / (l * l);
  double sum = 0.0;
  for (int n = 0;; ++n) {
    const double k = 2.0 * n + 1.0;
    const double term = std::exp(-decay * k * k) / (k * k);
    sum += term;
    if (term < 1e-14 * sum) break;
    if (n > 20'000'000)
      throw std::runtime_error("survival series failed to converge");
  }
  return 64.0 * rho0(spec) * l * l / std::pow(kPi, 4) * sum * sum;
}

double mean_reaction_time(const TwoMoleculeSpec& spec) {
  validate(spec);
  const double l = square_side(spec);
  const double scale = 16.0 * rho0(spec) * std::pow(l, 4) /
                       (spec.diffusion * std::pow(kPi, 5));
  double sum = 0.0;
  for (int n = 0;; ++n) {
    const double k = 2.0 * n + 1.0;
    const double term =
        (kPi / 2.0 - std::tanh(kPi * k / 2.0) / k) / (k * k * k * k);
    sum += term;
    // The term decays like k^-4; the remaining tail is bounded by
    // (pi/2) * k^-3 / 6, so stop once that is below the absolute target.
    if (kPi / 2.0 * scale / (6.0 * k * k * k) < 1e-13) break;
  }
  return scale * sum;
}

double mean_reaction_time_double_sum(const TwoMoleculeSpec& spec) {
  validate(spec);
  const double l = square_side(spec);
  const double scale = 64.0 * rho0(spec) * std::pow(l, 4) /
                       (spec.diffusion * std::pow(kPi, 6));
  double sum = 0.0;
  // Both indices run over odd integers; the summand is symmetric, so sum
  // the diagonal once and double the strict upper triangle.
  constexpr int kMax = 12'000;
  for (int n = 0; n < kMax; ++n) {
    const double kn = 2.0 * n + 1.0;
    const double kn2 = kn * kn;
    double row = 1.0 / (kn2 * kn2 * (kn2 + kn2));
    for (int m = n + 1; m < kMax; ++m) {
      const double km = 2.0 * m + 1.0;
      row += 2.0 / (kn * kn * km * km * (kn * kn + km * km));
    }
    sum += row;
    if (row < 1e-16 * sum && n > 8) break;
  }
  return scale * sum;
}

double reaction_location_cdf(const TwoMoleculeSpec& spec, double q) {
  validate(spec);
  const double l = square_side(spec);
  const double r = spec.reaction_radius;
  // Physical midpoint -> arclength along the reactive side of the square.
  double x = (q - 0.5 * r) / (spec.length - r) * l;
  x = std::min(std::max(x, 0.0), l);

  const double scale = 16.0 * rho0(spec) * l * l / std::pow(kPi, 3);
  // The summand is bounded by 2/k^3, so the tail beyond K is below
  // scale/K^2; pick K for 1e-11 absolute truncation error.
  const int n_terms =
      static_cast<int>(std::ceil(0.5 * std::sqrt(scale / 1e-11)));
  double sum = 0.0;
  for (int n = 0; n < n_terms; ++n) {
    const double k = 2.0 * n + 1.0;
    // tanh(pi k/2) saturates to 1 within double precision almost
    // immediately; skip the call once it has.
    const double th = k < 30.0 ? std::tanh(kPi * k / 2.0) : 1.0;
    sum += th * (1.0 - std::cos(k * kPi * x / l)) / (k * k * k);
  }
  return scale * sum;
}

double survival_inverse(const TwoMoleculeSpec& spec, double s) {
  validate(spec);
  if (!(s > 0.0)) throw std::invalid_argument("level must be positive");
  if (s >= survival(spec, 0.0)) return 0.0;
  double lo = 0.0;
  double hi = spec.length * spec.length / spec.diffusion;
  while (survival(spec, hi) > s) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw std::runtime_error("survival level unreachable");
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (survival(spec, mid) > s ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace fpkmc::analytic

// Adaptive Simpson quadrature.  Integrands here (Boltzmann weights of the
// supported potentials) are piecewise smooth, so recursive bisection with a
// standard 1/15 Richardson error estimate converges quickly once the
// integration range is split at the integrand's breakpoints.
#ifndef DLFPKMC_QUADRATURE_HPP
#define DLFPKMC_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace fpkmc {

namespace detail {

template <typename F>
double simpson_recurse(const F& f, double a, double b, double fa, double fm,
                       double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Integrates f over [a, b] to absolute tolerance abs_tol.
template <typename F>
double integrate(const F& f, double a, double b, double abs_tol,
                 int max_depth = 48) {
  if (!(b > a)) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_recurse(f, a, b, fa, fm, fb, whole, abs_tol,
                                 max_depth);
}

// Splits [a, b] at the given interior breakpoints (unsorted duplicates are
// fine), integrating each smooth piece to a proportional share of rel_tol
// times a first-pass magnitude estimate.
template <typename F>
double integrate_split(const F& f, double a, double b,
                       std::vector<double> breakpoints, double rel_tol) {
  breakpoints.push_back(a);
  breakpoints.push_back(b);
  std::sort(breakpoints.begin(), breakpoints.end());
  std::vector<double> knots;
  for (double x : breakpoints)
    if (x >= a && x <= b && (knots.empty() || x > knots.back())) {
      knots.push_back(x);
    }

  // Coarse magnitude estimate sets the absolute tolerance for the real pass.
  double rough = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    rough += integrate(f, knots[i], knots[i + 1], 1e-4, 12);
  const double abs_tol =
      rel_tol * std::max(std::fabs(rough), 1e-300) /
      static_cast<double>(std::max<std::size_t>(knots.size() - 1, 1));

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    total += integrate(f, knots[i], knots[i + 1], abs_tol);
  return total;
}

}  // namespace fpkmc

#endif  // DLFPKMC_QUADRATURE_HPP

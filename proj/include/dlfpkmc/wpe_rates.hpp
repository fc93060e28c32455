// Wang--Peskin--Elston jump rates for continuous-time random walks on a mesh
// in a potential V (units of kT).  The drift enters through the factor
// f(dV) = dV / (exp(dV) - 1), which tends to 1 as dV -> 0 and keeps the
// discrete chain in detailed balance with respect to the Boltzmann weights
// of the mesh cells.
#ifndef DLFPKMC_WPE_RATES_HPP
#define DLFPKMC_WPE_RATES_HPP

#include <cmath>

namespace fpkmc {

// Below this, dV/(exp(dV)-1) is 1 to double precision and the division would
// only add rounding noise.
inline constexpr double kRateDeltaVEpsilon = 1e-12;

// dV / (exp(dV) - 1), stable over the full double range.
inline double wpe_drift_factor(double dv) {
  if (std::fabs(dv) < kRateDeltaVEpsilon) return 1.0;
  if (dv > 700.0) return dv * std::exp(-dv);  // expm1 would overflow
  return dv / std::expm1(dv);  // for dv < -700, expm1 = -1 exactly: |dv|
}

// Hop rate on a uniform mesh of spacing h, from a node at potential v_from
// to a neighbor at potential v_to.
inline double uniform_rate(double D, double h, double v_from, double v_to) {
  return D / (h * h) * wpe_drift_factor(v_to - v_from);
}

// Hop rate across an edge of length h_j when the spacing on the node's other
// side is h_other.  The node's cell width is (h_j + h_other)/2, giving the
// prefactor 2D / (h_j (h_j + h_other)).  h_other = 0 is the half-cell node
// that sits on a reflecting boundary, whose escape rate doubles.  With
// h_other == h_j this reduces bit-for-bit to uniform_rate: the denominator
// h*(h+h) is exactly 2*(h*h), and IEEE division scales exactly by powers of
// two, so the quotient is identical.
inline double nonuniform_rate(double D, double h_j, double h_other,
                              double v_from, double v_to) {
  return 2.0 * D / (h_j * (h_j + h_other)) * wpe_drift_factor(v_to - v_from);
}

// Flux imbalance of one edge under the Boltzmann-weighted cell masses:
//   a_01 exp(-v_0) c_0 - a_10 exp(-v_1) c_1
// with cell widths c_0 = (h_01 + h_0other)/2 and c_1 = (h_01 + h_1other)/2.
// Exactly zero in infinite precision for the rates above; the tests require
// the floating-point residual to stay below 1e-12 on meshes with O(1) rates.
inline double detailed_balance_residual(double D, double h_01, double h_0other,
                                        double h_1other, double v_0,
                                        double v_1) {
  const double a01 = nonuniform_rate(D, h_01, h_0other, v_0, v_1);
  const double a10 = nonuniform_rate(D, h_01, h_1other, v_1, v_0);
  const double c0 = 0.5 * (h_01 + h_0other);
  const double c1 = 0.5 * (h_01 + h_1other);
  return a01 * std::exp(-v_0) * c0 - a10 * std::exp(-v_1) * c1;
}

}  // namespace fpkmc

#endif  // DLFPKMC_WPE_RATES_HPP

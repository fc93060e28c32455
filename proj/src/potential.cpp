#include "dlfpkmc/potential.hpp"

#include <stdexcept>

#include "dlfpkmc/quadrature.hpp"

namespace fpkmc {

double equilibrium_normalizer(const PotentialField& v, double L) {
  if (!(L > 0.0)) throw std::invalid_argument("domain length must be > 0");
  if (v.is_zero()) return L;
  return integrate_split([&v](double x) { return std::exp(-v(x)); }, 0.0, L,
                         v.interior_breakpoints(L), 1e-10);
}

double equilibrium_density(const PotentialField& v, double L, double x) {
  if (x < 0.0 || x > L)
    throw std::out_of_range("equilibrium_density queried outside [0, L]");
  return std::exp(-v(x)) / equilibrium_normalizer(v, L);
}

}  // namespace fpkmc

// One-dimensional external potential V(x) in units of kT.  Evaluation has to
// be cheap (it runs once per mesh edge when a protective domain is meshed),
// so the common closed-form kinds are dispatched inline.
#ifndef DLFPKMC_POTENTIAL_HPP
#define DLFPKMC_POTENTIAL_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fpkmc {

enum class PotentialKind { Zero, Cosine, Step, Tabulated };

class PotentialField {
 public:
  PotentialField() : kind_(PotentialKind::Zero) {}

  static PotentialField zero() { return PotentialField(); }

  // amplitude * cos(2*pi*frequency*x); frequency counts wells per unit length.
  static PotentialField cosine(double amplitude, double frequency) {
    PotentialField p;
    p.kind_ = PotentialKind::Cosine;
    p.a_ = amplitude;
    p.b_ = frequency;
    return p;
  }

  // height for x < location, 0 for x >= location (right-continuous).
  static PotentialField step(double height, double location) {
    PotentialField p;
    p.kind_ = PotentialKind::Step;
    p.a_ = height;
    p.b_ = location;
    return p;
  }

  // Piecewise-linear interpolation of (x, v) samples; x strictly increasing.
  static PotentialField tabulated(std::vector<double> xs,
                                  std::vector<double> vs) {
    if (xs.size() != vs.size() || xs.size() < 2)
      throw std::invalid_argument("tabulated potential needs >= 2 samples");
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (!(xs[i] > xs[i - 1]))
        throw std::invalid_argument("tabulated abscissae must increase");
    PotentialField p;
    p.kind_ = PotentialKind::Tabulated;
    p.xs_ = std::move(xs);
    p.vs_ = std::move(vs);
    return p;
  }

  PotentialKind kind() const { return kind_; }
  bool is_zero() const { return kind_ == PotentialKind::Zero; }
  double amplitude() const { return a_; }
  double frequency() const { return b_; }
  double step_height() const { return a_; }
  double step_location() const { return b_; }
  const std::vector<double>& table_x() const { return xs_; }
  const std::vector<double>& table_v() const { return vs_; }

  double operator()(double x) const {
    switch (kind_) {
      case PotentialKind::Zero:
        return 0.0;
      case PotentialKind::Cosine:
        return a_ * std::cos(2.0 * M_PI * b_ * x);
      case PotentialKind::Step:
        return x < b_ ? a_ : 0.0;
      case PotentialKind::Tabulated:
        return interpolate(x);
    }
    return 0.0;  // unreachable
  }

  // Points in (0, L) where V or V' is discontinuous; quadratures split here.
  std::vector<double> interior_breakpoints(double L) const {
    std::vector<double> bp;
    if (kind_ == PotentialKind::Step && b_ > 0.0 && b_ < L) {
      bp.push_back(b_);
    } else if (kind_ == PotentialKind::Tabulated) {
      for (double x : xs_)
        if (x > 0.0 && x < L) bp.push_back(x);
    }
    return bp;
  }

 private:
  double interpolate(double x) const {
    if (x < xs_.front() || x > xs_.back())
      throw std::out_of_range("tabulated potential queried at x=" +
                              std::to_string(x) + " outside sampled range");
    // upper_bound-free scan is wasteful for large tables; binary search.
    std::size_t lo = 0, hi = xs_.size() - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      (xs_[mid] <= x ? lo : hi) = mid;
    }
    const double w = (x - xs_[lo]) / (xs_[lo + 1] - xs_[lo]);
    return vs_[lo] + w * (vs_[lo + 1] - vs_[lo]);
  }

  PotentialKind kind_;
  double a_ = 0.0;
  double b_ = 0.0;
  std::vector<double> xs_, vs_;
};

inline double evaluate_potential(const PotentialField& v, double x) {
  return v(x);
}

// Normalizer Z = integral of exp(-V) over [0, L].
double equilibrium_normalizer(const PotentialField& v, double L);

// Stationary density exp(-V(x)) / Z on [0, L].
double equilibrium_density(const PotentialField& v, double L, double x);

}  // namespace fpkmc

#endif  // DLFPKMC_POTENTIAL_HPP

// Counter-derived pseudorandom streams for reproducible parallel-in-index
// realizations.  Each stream is an independent xoshiro256++ generator whose
// state is seeded through splitmix64, so (master_seed, realization, domain)
// triples map to well-separated streams without coordination.
#ifndef DLFPKMC_RNG_HPP
#define DLFPKMC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>

namespace fpkmc {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// xoshiro256++ with a strictly positive uniform variate so log(u) is always
// finite.  Not thread safe; create one stream per logical owner instead.
class RngStream {
 public:
  RngStream() : RngStream(0) {}

  explicit RngStream(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = detail::splitmix64(s);
  }

  // Stream for one realization of an experiment.
  static RngStream for_realization(std::uint64_t master_seed,
                                   std::uint64_t realization) {
    return RngStream(mix(mix(master_seed, 0x7265616c697a65ULL), realization));
  }

  // Stream for one protective domain within a realization.  domain_counter
  // must be unique over the lifetime of the realization, not just over the
  // currently live domains.
  static RngStream for_domain(std::uint64_t master_seed,
                              std::uint64_t realization,
                              std::uint64_t domain_counter) {
    return RngStream(
        mix(mix(mix(master_seed, 0x646f6d61696e73ULL), realization),
            domain_counter));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // Uniform on (0, 1]: 53 high bits shifted into [1, 2^53].
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Index uniform on [0, n).  n must be positive; modulo bias is < 2^-40 for
  // every n used here (all far below 2^24) and is irrelevant next to the
  // Monte Carlo error, so no rejection loop.
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 1));
    std::uint64_t z = detail::splitmix64(s);
    return z ^ detail::splitmix64(s);
  }

  std::uint64_t state_[4];
};

// Exponential waiting time with the convention that a zero (or negative)
// rate means the event never fires.
inline double sample_exponential(double rate, RngStream& rng) {
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(rng.uniform01()) / rate;
}

}  // namespace fpkmc

#endif  // DLFPKMC_RNG_HPP

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

#include "gdrkit/common.hpp"

namespace gdrkit {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Counter-based deterministic generator. Draw i from seed s is a pure
/// function of (s, i), so identical seed + identical call sequence gives
/// identical values on every platform. Substreams are derived by hashing
/// the parent seed with caller-chosen ids, which keeps parallel consumers
/// independent no matter how many values each one draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t next_u64() { return mix64(seed_ ^ mix64(++counter_)); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Modulo bias is negligible for the small n
  /// used here and keeps the draw count fixed at one.
  std::uint64_t uniform_int(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Box-Muller; always consumes exactly two draws, no cached spare.
  double normal() {
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  RngStream derive(std::initializer_list<std::uint64_t> ids) const {
    std::uint64_t s = seed_;
    for (std::uint64_t id : ids) s = mix64(s ^ mix64(id));
    return RngStream(s);
  }

  RngStream derive(std::string_view label, std::initializer_list<std::uint64_t> ids = {}) const {
    std::uint64_t s = mix64(seed_ ^ fnv1a64(label));
    for (std::uint64_t id : ids) s = mix64(s ^ mix64(id));
    return RngStream(s);
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace gdrkit

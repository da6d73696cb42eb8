#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ecgregen {

/// Seeded deterministic PRNG (splitmix64, Steele/Lea/Flood 2014).
///
/// Every seeded stream in this project (random projection, k-means++,
/// random-report baseline, fixture synthesis) goes through this class so
/// results never depend on the standard library's engine or distribution
/// implementations, which are not portable bit-for-bit.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 mantissa bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double uniform_open() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform index in [0, n). n must be > 0.
  size_t index(size_t n) {
    size_t i = static_cast<size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Standard normal via Box-Muller. Each pair consumes exactly two
  /// uniforms; the cosine variate is returned first, the sine variate is
  /// cached. Generation order is part of the determinism contract.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_open();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ecgregen

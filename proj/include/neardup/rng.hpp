#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace neardup {

// Default seed for every randomized procedure in the toolkit.
inline constexpr std::uint64_t kDefaultSeed = 42;

// splitmix64: small, fast, and fully specified, so seeded runs are
// byte-identical across platforms and standard libraries (the std::
// distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Independent stream `index` derived from one seed; used to make
  // per-resample / per-item streams that are scheduling-independent.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    Rng mix(seed + 0x9E3779B97F4A7C15ULL * (index + 1));
    mix.next_u64();
    return mix;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). The modulo bias is negligible for
  // the bounds used here (far below 2^32).
  std::uint64_t below(std::uint64_t bound) { return next_u64() % bound; }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(below(n));
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  bool chance(double p) { return next_double() < p; }

  // Standard normal via Box-Muller (one value per call; the pair's
  // second value is cached).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace neardup

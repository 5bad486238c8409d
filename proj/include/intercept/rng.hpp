#pragma once

// Seeded random source with a fully specified algorithm so simulated runs are
// reproducible across standard libraries: MT19937-64 (bit-exact by the C++
// standard), 53-bit uniform doubles, Box-Muller normals, SplitMix64 stream
// derivation. std::*_distribution is avoided because its output is
// implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace intercept {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Independent generator for a named sub-stream.
  Rng stream(std::uint64_t id) const { return Rng(splitmix64(seed_of(id))); }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_of(std::uint64_t id) const {
    std::mt19937_64 copy = engine_;
    return copy() ^ splitmix64(id);
  }

  std::mt19937_64 engine_;
};

}  // namespace intercept

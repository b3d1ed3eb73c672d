#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace rmloc {

// SplitMix64 finalizer. Used to derive statistically independent seeds from
// a root seed plus a stream index, so that parallel trials consume disjoint
// random streams no matter how they are scheduled.
inline uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t root, uint64_t stream) {
  return mix64(root ^ mix64(stream ^ 0xD1B54A32D192ED03ull));
}

// Deterministic random source. The engine is std::mt19937_64 (its output
// sequence is pinned by the standard); all value conversions are done here
// rather than with std::*_distribution so results are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(mix64(seed)) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection sampling removes modulo bias.
  uint64_t uniform_below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; one draw consumes two uniforms and discards the sine branch,
  // keeping the call sequence independent of any cached state.
  double normal(double mu, double sigma) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mu + sigma * r * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rmloc

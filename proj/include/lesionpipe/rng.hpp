#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lesionpipe {

// Seeded generator used everywhere randomness appears. The distribution
// transforms are hand-rolled on top of mt19937 so that every stream is
// bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed)
      : gen_(static_cast<std::mt19937::result_type>(seed)) {}

  uint32_t next_u32() { return gen_(); }

  // [0, 1)
  double uniform() { return next_u32() * (1.0 / 4294967296.0); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n), n > 0
  uint32_t uniform_int(uint32_t n) {
    return static_cast<uint32_t>((static_cast<uint64_t>(next_u32()) * n) >> 32);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller
  double normal(double mean = 0.0, double stddev = 1.0) {
    constexpr double kTwoPi = 6.283185307179586;
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 1e-12);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return mean + stddev * r * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Independent stream derived from a base seed and a stream tag (splitmix64).
inline uint64_t derive_seed(uint64_t base, uint64_t tag) {
  uint64_t z = base + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace lesionpipe

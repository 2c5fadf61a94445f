#pragma once

#include <cstdint>

namespace tcal {

// Counter-based deterministic generator. Every draw is a pure function of
// (seed, stream, counter), so renders and corner sets are reproducible
// bit-for-bit regardless of call order or platform. The mixer is splitmix64
// (constants 0x9E3779B97F4A7C15, 0xBF58476D1CE4E5B9, 0x94D049BB133111EB);
// streams are decorrelated by pre-mixing the stream id into the seed.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed) : seed_(seed) {}

  static uint64_t mix(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  uint64_t bits(uint64_t stream, uint64_t counter) const {
    return mix(mix(seed_ ^ mix(stream)) + counter);
  }

  // Uniform in [0, 1), 53 mantissa bits.
  double uniform(uint64_t stream, uint64_t counter) const {
    return static_cast<double>(bits(stream, counter) >> 11) * 0x1.0p-53;
  }

  double uniform(uint64_t stream, uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform(stream, counter);
  }

  // Standard normal via the 12-uniform sum (Irwin-Hall, exact unit variance).
  // Chosen over Box-Muller so draws involve no transcendental calls and stay
  // bit-identical across platforms and libm versions.
  double normal(uint64_t stream, uint64_t counter) const {
    double s = 0.0;
    for (uint64_t k = 0; k < 12; ++k) s += uniform(stream, counter * 12 + k);
    return s - 6.0;
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
};

}  // namespace tcal

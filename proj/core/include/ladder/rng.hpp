#pragma once

#include <cstdint>

namespace ladder {

// Deterministic seeded generator used for weight init and test inputs.
//
// splitmix64 for the raw stream; normals come from an Irwin-Hall sum of
// 12 uniforms (mean 0, variance 1). No libm calls, so the same seed
// produces bit-identical float values on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Approximately standard normal, scaled by stddev.
  float next_normal(float stddev) {
    double acc = 0.0;
    for (int i = 0; i < 12; ++i) acc += next_unit();
    return static_cast<float>((acc - 6.0) * static_cast<double>(stddev));
  }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

 private:
  uint64_t state_;
};

}  // namespace ladder

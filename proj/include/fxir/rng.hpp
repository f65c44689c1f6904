// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace fxir {

/// splitmix64: tiny, fast, reproducible across platforms.  Used for every
/// seeded draw in the library (parameter init, synthetic inputs) so that a
/// (seed, stream-index) pair pins all randomness bit-for-bit.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Derives an independent stream for (seed, index); used so input batch i
  /// and input batch j never share a generator state.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64(seed + 0x9E3779B97F4A7C15ULL * (index + 1));
  }
};

}  // namespace fxir

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace deco {

/// Seeded 64-bit Mersenne Twister (std::mt19937_64) with conversions written
/// out explicitly, so streams can be reproduced outside C++. The standard
/// distributions are implementation-defined and are not used.
class Rng {
 public:
  /// Stream tags keep independent consumers of one user seed apart.
  enum class Stream : std::uint64_t {
    kWeights = 0,
    kSampling = 0x9E3779B97F4A7C15ull,
    kPerturb = 0xD1B54A32D192ED03ull,
    kPope = 0x94D049BB133111EBull,
    kFixtures = 0xBF58476D1CE4E5B9ull,
  };

  explicit Rng(std::uint64_t seed, Stream stream = Stream::kWeights)
      : engine_(seed ^ static_cast<std::uint64_t>(stream)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1): top 53 bits scaled by 2^-53.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) by rejection on the top of the 64-bit range.
  std::uint64_t below(std::uint64_t n);

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  /// Standard normal via Box-Muller (one value per two uniforms).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace deco

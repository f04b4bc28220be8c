#pragma once

#include <cstdint>

namespace rimamba {

/// SplitMix64 generator. The output stream depends only on the seed, so
/// every consumer that draws in the same order sees the same numbers on
/// every platform. Floating-point draws are built from the integer stream
/// with exact arithmetic; only the Box-Muller transform touches libm.
class Prng {
 public:
  explicit Prng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal();

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Mixes a base seed with a stream tag into an independent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace rimamba

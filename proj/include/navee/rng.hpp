#pragma once

#include <cstdint>

namespace navee {

/// SplitMix64 (Steele, Lea, Flood 2014). Constants are the published ones;
/// the output sequence is identical on every platform, which is what makes
/// generated weights reproducible bit-for-bit.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 24 bits of mantissa; exact in float.
  float uniform_float() noexcept {
    return static_cast<float>(next() >> 40) * (1.0f / 16777216.0f);
  }

  /// Uniform in [0, 1) with 53 bits.
  double uniform_double() noexcept {
    return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
  }

  /// Uniform float in [-r, r).
  float symmetric(float r) noexcept { return (2.0f * uniform_float() - 1.0f) * r; }

  /// Uniform integer in [0, n). Multiply-shift; bias is below 2^-32 for the
  /// small n used here.
  __extension__ using Wide = unsigned __int128;
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(
        (static_cast<Wide>(next()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

}  // namespace navee

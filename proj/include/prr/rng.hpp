#pragma once

// Counter-based random streams. Every draw is a pure function of
// (seed, stream index, draw counter), so results do not depend on how
// trials are scheduled across threads.
//
//   mix64(z)      = SplitMix64 finalizer
//   key(seed, i)  = mix64(mix64(seed) ^ ((i + 1) * 0xD1B54A32D192ED03))
//   draw j (j>=1) = mix64(key + j * 0x9E3779B97F4A7C15)
//
// Integers below n use Lemire's multiply-shift with rejection; doubles in
// [0, 1) take the top 53 bits.

#include <cstdint>

namespace prr {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t index)
      : key_(mix64(mix64(seed) ^ ((index + 1) * 0xD1B54A32D192ED03ULL))) {}

  std::uint64_t next() { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  // Uniform on {0, ..., range - 1}; range must be > 0.
  std::uint64_t below(std::uint64_t range) {
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * range;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < range) {
      const std::uint64_t t = (0 - range) % range;
      while (lo < t) {
        x = next();
        m = static_cast<__uint128_t>(x) * range;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1p-53; }

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace prr

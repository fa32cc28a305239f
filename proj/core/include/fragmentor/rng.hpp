#pragma once

#include <cmath>
#include <cstdint>

namespace fragmentor {

/// SplitMix64 generator. Replicate r of a run seeded with s draws from
/// replicate_stream(s, r).
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) : state_(state) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on (0, 1], 53-bit resolution.
  double uniform_open0() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  /// Exponential with the given rate (> 0).
  double exponential(double rate) { return -std::log(uniform_open0()) / rate; }

 private:
  std::uint64_t state_;
};

constexpr std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline SplitMix64 replicate_stream(std::uint64_t seed, std::uint64_t replicate) {
  return SplitMix64(mix64(seed + 0x632be59bd9b4e019ULL) ^ mix64(replicate * 0x9e3779b97f4a7c15ULL + 1));
}

}  // namespace fragmentor

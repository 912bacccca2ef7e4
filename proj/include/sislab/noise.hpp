#pragma once

#include <cmath>
#include <cstdint>

namespace sislab::noise {

// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator keyed by (seed, stream, counter). The value depends
// only on the key, so draws can be produced in any order, from any thread,
// with identical results.
constexpr std::uint64_t keyed_bits(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t counter) {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (stream + 0xbf58476d1ce4e5b9ULL));
  return mix64(h ^ (counter + 0x94d049bb133111ebULL));
}

// Uniform draw in the open interval (0,1): (k + 1/2) / 2^53 with 53-bit k.
constexpr double uniform01(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t counter) {
  return (static_cast<double>(keyed_bits(seed, stream, counter) >> 11) + 0.5) *
         0x1.0p-53;
}

// Standard normal draw via Box-Muller; consumes counters 2k and 2k+1.
inline double gaussian(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t index) {
  const double u1 = uniform01(seed, stream, 2 * index);
  const double u2 = uniform01(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace sislab::noise

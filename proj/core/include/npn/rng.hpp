#pragma once

#include <cstdint>
#include <random>

namespace npn {

// splitmix64 finalizer; used to mix seeds with stream coordinates so that
// every (sample, epoch, view) combination gets an independent RNG stream.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ mix64(a));
  s = mix64(s ^ mix64(b));
  s = mix64(s ^ mix64(c));
  return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a,
                                std::uint64_t b = 0, std::uint64_t c = 0) {
  return std::mt19937_64(derive_seed(seed, a, b, c));
}

}  // namespace npn

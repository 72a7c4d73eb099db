#pragma once

#include <cstdint>
#include <random>

namespace qup {

// splitmix64; used to derive independent per-shot / per-salt streams from one
// user-facing seed so that results are reproducible and thread-count-invariant.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic stream id from (seed, salt words). Each distinct tuple gives
// an effectively independent 64-bit seed.
inline uint64_t derive_seed(uint64_t seed, uint64_t salt_a, uint64_t salt_b = 0) {
  uint64_t s = seed;
  uint64_t h = splitmix64(s);
  s ^= salt_a + 0x9e3779b97f4a7c15ULL;
  h ^= splitmix64(s);
  s ^= salt_b + 0xc2b2ae3d27d4eb4fULL;
  h ^= splitmix64(s);
  return h;
}

inline std::mt19937_64 make_engine(uint64_t seed, uint64_t salt_a, uint64_t salt_b = 0) {
  return std::mt19937_64(derive_seed(seed, salt_a, salt_b));
}

}  // namespace qup

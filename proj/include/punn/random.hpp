#pragma once

#include <cstdint>
#include <random>

namespace punn {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive well-spread child seeds from a master
// seed so that per-run and per-individual random streams are independent of
// scheduling order.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(seed_combine(seed, stream));
}

}  // namespace punn

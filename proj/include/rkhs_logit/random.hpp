#pragma once

#include <cstdint>
#include <random>

namespace rkhs_logit {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent sub-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` of a base seed. Distinct streams of the same
/// base are statistically independent for practical purposes.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(base ^ mix_seed(stream + 0x5851f42d4c957f2dULL));
}

/// Replication seeds follow base XOR rep so that a failing replication can be
/// replayed from the logged seed alone.
inline std::uint64_t replication_seed(std::uint64_t base, std::uint64_t rep) {
  return base ^ rep;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

}  // namespace rkhs_logit

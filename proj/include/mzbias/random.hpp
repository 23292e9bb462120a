#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mzbias {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from an ordered tuple of keys, e.g.
/// (master seed, unitary index, trial index). Streams never depend on the
/// worker that consumes them.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

inline std::mt19937_64 make_stream(std::initializer_list<std::uint64_t> keys) {
  return std::mt19937_64(derive_seed(keys));
}

}  // namespace mzbias

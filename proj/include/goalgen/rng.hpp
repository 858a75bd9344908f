#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace goalgen {

using Rng = std::mt19937_64;

// Derives a stream seed from the root seed and a stream name, so that every
// component draws from its own deterministic stream.
inline uint64_t derive_seed(uint64_t root, std::string_view stream) {
  uint64_t h = root ^ 0x9e3779b97f4a7c15ULL;
  for (char c : stream) {
    h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
  }
  h ^= h >> 29;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 32;
  return h;
}

inline Rng make_rng(uint64_t root, std::string_view stream) {
  return Rng(derive_seed(root, stream));
}

// Uniform draw from [0, n).
inline size_t uniform_below(Rng& rng, size_t n) {
  return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
}

}  // namespace goalgen

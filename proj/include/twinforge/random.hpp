#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace twinforge {

// splitmix64; used to derive per-component streams from one master seed.
inline std::uint64_t split_seed(std::uint64_t seed, std::string_view component) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : component) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::string_view component) {
  return Rng(split_seed(seed, component));
}

}  // namespace twinforge

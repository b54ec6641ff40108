#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace exmix {

using Rng = std::mt19937_64;

// Independent sub-stream seed for a named pipeline stage ("simulate", "init",
// "kmeans", "layout", ...), derived from the run's root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : stream) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::uint64_t z = root ^ h;  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace exmix

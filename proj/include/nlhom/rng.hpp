#pragma once

#include <cstdint>

namespace nlhom {

// splitmix64 in counter mode: the value at a node depends only on
// (seed, counter), so fields can be generated in any order.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [-1, 1).
inline double uniform_pm1(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = splitmix64(seed ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
  return static_cast<double>(z >> 11) * 0x1.0p-52 - 1.0;
}

}  // namespace nlhom

#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>

namespace hyperrestore {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream seed for (base, parts...), e.g. (run seed, step, level, sample).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t s = mix64(base);
  for (auto p : parts) s = mix64(s ^ p);
  return s;
}

inline std::uint64_t level_bits(double level) { return std::bit_cast<std::uint64_t>(level); }

}  // namespace hyperrestore

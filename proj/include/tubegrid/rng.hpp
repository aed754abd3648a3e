#pragma once

#include <cstdint>

namespace tubegrid {

// Counter-based pseudo-random numbers.  Unlike std::uniform_real_distribution
// the mapping from (seed, counters) to a double is fixed by this code alone,
// so seeded runs are reproducible byte-for-byte across platforms.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9E3779B97F4A7C15ull + b + (a << 6) + (a >> 2)));
}

// [0, 1)
inline double unit_double(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// [-1, 1)
inline double signed_unit(std::uint64_t h) {
  return 2.0 * unit_double(h) - 1.0;
}

}  // namespace tubegrid

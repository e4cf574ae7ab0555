#pragma once

#include <cmath>
#include <cstdint>

namespace anisoeig {

// splitmix64 stream; per-particle streams are derived from (seed, index) so
// results do not depend on scheduling.
struct RngStream {
  std::uint64_t state = 0;

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double next_unit() {  // [0,1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_unit_open() {  // (0,1]
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double next_exponential() { return -std::log(next_unit_open()); }

  // Box-Muller: one pair of independent standard normals per call.
  void next_normal_pair(double& g1, double& g2) {
    double u1 = next_unit_open();
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 6.283185307179586476925286766559 * u2;
    g1 = r * std::cos(th);
    g2 = r * std::sin(th);
  }
};

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

inline RngStream particle_stream(std::uint64_t seed, std::uint64_t index) {
  return RngStream{mix64(seed ^ 0x5851f42d4c957f2dULL) +
                   mix64(index + 0x9e3779b97f4a7c15ULL)};
}

}  // namespace anisoeig

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Seeded randomness helpers. Distributions are hand-rolled on top of
// mt19937_64 so that identical seeds give identical streams on every
// platform (std::uniform_real_distribution et al. are implementation
// defined).
namespace imcgae::rng {

using Engine = std::mt19937_64;

/// splitmix64 finalizer, used to derive well-separated child seeds.
inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform double in [0, 1).
inline double unit(Engine& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double uniform(Engine& g, double lo, double hi) { return lo + (hi - lo) * unit(g); }

/// Uniform integer in [0, n) without modulo bias.
inline std::uint64_t bounded(Engine& g, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % n;
}

/// Standard normal via Box-Muller (no state carried between calls).
inline double normal(Engine& g) {
  double u1 = unit(g);
  while (u1 <= 0.0) u1 = unit(g);
  const double u2 = unit(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace imcgae::rng

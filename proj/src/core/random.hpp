#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace fcl {

// The std distributions are implementation-defined; these helpers only use
// the raw mt19937_64 stream so seeded outputs are identical across toolchains.
using Rng = std::mt19937_64;

/// Uniform in [0, 1) from the top 53 bits.
inline double unit_draw(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n), n >= 1, by rejection.
inline std::uint64_t index_draw(Rng& rng, std::uint64_t n) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = kMax - kMax % n;
  std::uint64_t x = rng();
  while (x >= limit) {
    x = rng();
  }
  return x % n;
}

/// Standard normal via Box-Muller (one variate per call).
inline double normal_draw(Rng& rng) {
  double u1 = unit_draw(rng);
  while (u1 <= 0.0) {
    u1 = unit_draw(rng);
  }
  const double u2 = unit_draw(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(index_draw(rng, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

/// Derives an independent stream seed from a base seed and a salt (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

} // namespace fcl

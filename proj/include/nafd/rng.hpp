#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "nafd/types.hpp"

namespace nafd {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Independent stream per (master seed, trial, redraw attempt).
inline Rng trial_rng(std::uint64_t master, std::uint64_t trial,
                     std::uint64_t attempt = 0) {
  return Rng(splitmix64(splitmix64(master) ^ splitmix64(trial + 0x1000003ull) ^
                        splitmix64(attempt * 0x2545F4914F6CDD1Dull + 7)));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double gaussian(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

/// CN(0, variance)
inline cd complex_gaussian(Rng& rng, double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = gaussian(rng);
  const double im = gaussian(rng);
  return {s * re, s * im};
}

}  // namespace nafd

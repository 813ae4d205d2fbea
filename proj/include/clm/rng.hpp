#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace clm {

// All randomness in the library flows through these helpers instead of
// std::*_distribution, whose output is implementation-defined. Runs are
// reproducible bit-for-bit across standard libraries this way.
using Rng = std::mt19937_64;

// uniform in [0, 1)
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// standard normal via Box-Muller (one value per two draws, no cached spare)
inline double normal01(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// uniform index in [0, n), rejection-sampled to avoid modulo bias
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return static_cast<std::size_t>(r % n);
}

}  // namespace clm

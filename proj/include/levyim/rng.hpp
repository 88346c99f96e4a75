#pragma once

// Counter-based random numbers. Every variate is a pure function of
// (seed, stream, indices), so paths can be evaluated in any order and two
// scenarios built from the same seed see exactly the same Brownian motion.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace levyim::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t a = 0,
                                        std::uint64_t b = 0, std::uint64_t c = 0) noexcept {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return splitmix64(h ^ c);
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
inline constexpr double unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t a = 0, std::uint64_t b = 0,
                      std::uint64_t c = 0) noexcept {
  return unit_open(hash_key(seed, stream, a, b, c));
}

/// Standard normal via Box-Muller on two hashed uniforms.
inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t a = 0, std::uint64_t b = 0,
                     std::uint64_t c = 0) noexcept {
  const std::uint64_t h = hash_key(seed, stream, a, b, c);
  const double u1 = unit_open(h);
  const double u2 = unit_open(splitmix64(h ^ 0xd1b54a32d192ed03ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Positive stable variate of index a in (0,1] with E exp(-lambda S) = exp(-lambda^a).
/// Chambers-Mallows-Stuck with skewness 1 (Kanter's form); `angle` uniform on (0, pi),
/// `expo` standard exponential.
inline double positive_stable(double a, double angle, double expo) noexcept {
  if (a >= 1.0) return 1.0;
  const double s = std::sin(angle);
  const double left = std::sin(a * angle) / std::pow(s, 1.0 / a);
  const double right = std::pow(std::sin((1.0 - a) * angle) / expo, (1.0 - a) / a);
  return left * right;
}

}  // namespace levyim::rng

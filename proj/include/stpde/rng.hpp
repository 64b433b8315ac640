// Counter-based random numbers for reproducible Monte Carlo: a Philox-4x32
// block function keyed by (seed, path, step, component) so every Gaussian
// increment is addressable, independent of thread scheduling.
//
// The generator follows Salmon et al., "Parallel random numbers: as easy as
// 1, 2, 3" (SC'11): ten rounds of the 4x32 Feistel-like mix with the
// published multipliers and Weyl key schedule.
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#ifndef STPDE_RNG_HPP
#define STPDE_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace stpde {

namespace philox {

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;  // golden ratio
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;  // sqrt(3) - 1

inline std::uint32_t mul_hi(std::uint32_t a, std::uint32_t b) {
  return static_cast<std::uint32_t>(
      (static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b)) >> 32);
}

/// One 4x32 block: 10 rounds applied to `ctr` under `key`.
inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint32_t hi0 = mul_hi(kMul0, ctr[0]);
    const std::uint32_t lo0 = kMul0 * ctr[0];
    const std::uint32_t hi1 = mul_hi(kMul1, ctr[2]);
    const std::uint32_t lo1 = kMul1 * ctr[2];
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace philox

/// Uniform double in (0, 1): bit pattern shifted to the cell centers so the
/// endpoints are unreachable.
inline double uniform_from_bits(std::uint32_t w) {
  return (static_cast<double>(w) + 0.5) * 0x1p-32;
}

/// Standard Gaussian addressed by (seed, path, step, component), computed
/// with one Philox block and the Box-Muller transform.
inline double gaussian_draw(std::uint64_t seed, std::uint64_t path,
                            std::uint32_t step, std::uint32_t component) {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(path),
      static_cast<std::uint32_t>(path >> 32), step, component};
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const std::array<std::uint32_t, 4> out = philox::block(ctr, key);
  const double u1 = uniform_from_bits(out[0]);
  const double u2 = uniform_from_bits(out[1]);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Wiener-increment source for one simulation: identical (seed, path, step,
/// component) tuples reproduce identical increments bit-for-bit, regardless
/// of how paths are scheduled onto threads.
struct BrownianDriver {
  std::uint64_t seed = 0;
  int dim = 1;
  double dt = 0.0;

  /// Unit-variance draw for one component of one step of one path.
  double normal(std::uint64_t path, std::uint32_t step,
                std::uint32_t component) const {
    return gaussian_draw(seed, path, step, component);
  }

  /// Brownian increment W^{n+1} - W^n, componentwise variance dt.
  double increment(std::uint64_t path, std::uint32_t step,
                   std::uint32_t component) const {
    return std::sqrt(dt) * normal(path, step, component);
  }
};

}  // namespace stpde

#endif  // STPDE_RNG_HPP

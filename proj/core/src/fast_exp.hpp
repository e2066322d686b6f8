// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>

#include "atf/tensor.hpp"

namespace atf::detail {

/// exp(x) for x <= 0, within a few ulp; 0 below -708. Branch-free so that
/// loops over it vectorize.
inline real exp_nonpositive(real x) {
  constexpr real kLog2e = 1.4426950408889634;
  constexpr real kLn2Hi = 6.93147180369123816490e-01;
  constexpr real kLn2Lo = 1.90821492927058770002e-10;
  const real xc = x < -708.0 ? -708.0 : x;
  // Adding 1.5 * 2^52 rounds to the nearest integer.
  constexpr real kShift = 0x1.8p52;
  const real n = (xc * kLog2e + kShift) - kShift;
  const real r = (xc - n * kLn2Hi) - n * kLn2Lo;
  // Taylor series to r^13; |r| <= ln2 / 2.
  real p = 1.0 / 6227020800.0;
  p = p * r + 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  const auto bits = static_cast<std::uint64_t>(static_cast<std::int64_t>(n) + 1023) << 52;
  const real scaled = p * std::bit_cast<real>(bits);
  return x < -708.0 ? 0.0 : scaled;
}

} // namespace atf::detail

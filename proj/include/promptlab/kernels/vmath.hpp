// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

// Branch-free elementwise functions that the compiler can vectorize.

#pragma once

#include <bit>
#include <cstdint>

namespace promptlab::kernels {

// exp(x) within a few ulp for x in [-708, 709]; inputs outside are clamped
// there. NaN propagates.
inline double vexp(double x) {
  constexpr double kLog2e = 1.4426950408889634;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  constexpr double kShifter = 6755399441055744.0;  // 1.5 * 2^52
  x = x < -708.0 ? -708.0 : x;
  x = x > 709.0 ? 709.0 : x;
  const double n = (x * kLog2e + kShifter) - kShifter;
  const double r = (x - n * kLn2Hi) - n * kLn2Lo;
  double p = 1.0 / 6227020800.0;
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
  return p * std::bit_cast<double>(bits);
}

// tanh(y) with absolute error near 1e-16.
inline double vtanh(double y) {
  const double a = y < 0.0 ? -y : y;
  const double e = vexp(2.0 * a);
  const double t = 1.0 - 2.0 / (e + 1.0);
  return y < 0.0 ? -t : t;
}

}  // namespace promptlab::kernels

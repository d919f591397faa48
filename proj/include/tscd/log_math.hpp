#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace tscd {

/// log(0); the identity element for log_add.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// log(exp(x) + exp(y)) without overflow. Either argument may be kLogZero.
inline double log_add(double x, double y) noexcept {
  if (x < y) std::swap(x, y);
  if (y == kLogZero) return x;
  return x + std::log1p(std::exp(y - x));
}

/// log(exp(x) - exp(y)) for x >= y. Results that cancel to within a few ulps
/// of x are clamped to kLogZero.
inline double log_sub(double x, double y) noexcept {
  if (y == kLogZero) return x;
  const double d = y - x;
  if (d >= 0.0) return kLogZero;
  const double r = -std::expm1(d);
  if (r <= 8.0 * std::numeric_limits<double>::epsilon()) return kLogZero;
  return x + std::log(r);
}

/// Max-shifted log-sum-exp over a range; kLogZero for an empty range.
inline double log_sum_exp(std::span<const double> terms) noexcept {
  if (terms.empty()) return kLogZero;
  const double hi = *std::max_element(terms.begin(), terms.end());
  if (hi == kLogZero || std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - hi);
  return hi + std::log(acc);
}

}  // namespace tscd

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace tscd::stats {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
  double width() const noexcept { return hi - lo; }
};

/// Point estimate with a confidence interval.
struct Estimate {
  double value = std::numeric_limits<double>::quiet_NaN();
  Interval ci{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double se = std::numeric_limits<double>::quiet_NaN();
  std::int64_t count = 0;
};

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>{}, p);
}

/// Wilson score interval for a binomial proportion.
inline Estimate wilson(std::int64_t successes, std::int64_t trials, double confidence = 0.95) {
  Estimate e;
  e.count = trials;
  if (trials <= 0) return e;
  const double z = normal_quantile(0.5 + confidence / 2.0);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  e.value = p;
  e.se = std::sqrt(p * (1.0 - p) / n);
  e.ci = {std::max(0.0, centre - half), std::min(1.0, centre + half)};
  return e;
}

/// Sample mean with a Student-t interval.
inline Estimate mean_t(std::span<const double> xs, double confidence = 0.95) {
  Estimate e;
  e.count = static_cast<std::int64_t>(xs.size());
  if (xs.empty()) return e;
  double s = 0.0;
  for (double x : xs) s += x;
  const double n = static_cast<double>(xs.size());
  const double mean = s / n;
  e.value = mean;
  if (xs.size() < 2) {
    e.se = 0.0;
    e.ci = {mean, mean};
    return e;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double se = std::sqrt(ss / (n - 1.0) / n);
  const boost::math::students_t_distribution<double> t(n - 1.0);
  const double q = boost::math::quantile(t, 0.5 + confidence / 2.0);
  e.se = se;
  e.ci = {mean - q * se, mean + q * se};
  return e;
}

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  Interval slope_ci;
};

/// Weighted least squares y = intercept + slope * x with a t interval on the
/// slope. Weights are inverse variances up to a common factor.
inline LinearFit weighted_fit(std::span<const double> x, std::span<const double> y,
                              std::span<const double> w, double confidence = 0.95) {
  const std::size_t n = x.size();
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += w[i] * r * r;
  }
  const double dof = static_cast<double>(n) - 2.0;
  const double se = std::sqrt(rss / dof / sxx);
  const boost::math::students_t_distribution<double> t(dof);
  const double q = boost::math::quantile(t, 0.5 + confidence / 2.0);
  f.slope_ci = {f.slope - q * se, f.slope + q * se};
  return f;
}

}  // namespace tscd::stats

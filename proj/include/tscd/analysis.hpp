#pragma once

// Cost-parameter design: distribution distance ratios, the convergence /
// divergence conditions on (a, c), a suggested parameter rule, and closed-form
// expected-risk curves.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "tscd/core.hpp"
#include "tscd/log_math.hpp"

namespace tscd::analysis {

/// The two densities are too close to separate (d0' <= 1 within tolerance).
class IndistinguishableError : public InputError {
 public:
  using InputError::InputError;
};

/// d0 = E_f0[f1] / E_f0[f0], d0' = 1/d0, d1 = E_f1[f1] / E_f1[f0].
struct DistanceRatios {
  double d0 = 1.0;
  double d0_prime = 1.0;
  double d1 = 1.0;
  /// Delta-method standard errors; zero for analytic values.
  double se_d0_prime = 0.0;
  double se_d1 = 0.0;
  bool estimated = false;

  static DistanceRatios exact(double d0_prime, double d1) {
    return {1.0 / d0_prime, d0_prime, d1, 0.0, 0.0, false};
  }
};

namespace detail {

struct RatioEstimate {
  double value;
  double se;
};

// mean(num) / mean(den) over draws from `from`, with a delta-method SE.
inline RatioEstimate ratio_of_means(const DistributionPair& pair, Which from, Which num, Which den,
                                    std::int64_t samples, Rng& rng) {
  double su = 0, sv = 0, suu = 0, svv = 0, suv = 0;
  for (std::int64_t i = 0; i < samples; ++i) {
    const double x = pair.sample(from, rng);
    const double u = pair.density(num, x);
    const double v = pair.density(den, x);
    su += u;
    sv += v;
    suu += u * u;
    svv += v * v;
    suv += u * v;
  }
  const double nn = static_cast<double>(samples);
  const double mu = su / nn, mv = sv / nn;
  const double var_u = (suu / nn - mu * mu) * nn / (nn - 1);
  const double var_v = (svv / nn - mv * mv) * nn / (nn - 1);
  const double cov = (suv / nn - mu * mv) * nn / (nn - 1);
  const double r = mu / mv;
  const double var_r = (var_u - 2 * r * cov + r * r * var_v) / (mv * mv * nn);
  return {r, std::sqrt(std::max(var_r, 0.0))};
}

}  // namespace detail

/// Analytic for the Gaussian mean shift (d0' = d1 = exp(SNR/4)); Monte-Carlo
/// ratio-of-means otherwise, which needs samplers and mc_samples >= 1e4.
inline DistanceRatios distance_ratios(const DistributionPair& pair,
                                      std::optional<std::int64_t> mc_samples = std::nullopt,
                                      std::uint64_t seed = 0x5eed) {
  if (pair.is_gaussian()) {
    const double r = std::exp(pair.snr() / 4.0);
    return DistanceRatios::exact(r, r);
  }
  if (!pair.has_sampler(Which::f0) || !pair.has_sampler(Which::f1))
    throw InputError("distance_ratios: custom pair needs a sampler for each density");
  const std::int64_t samples = mc_samples.value_or(100000);
  if (samples < 10000) throw InputError("distance_ratios: need at least 1e4 Monte-Carlo samples");
  Rng rng(seed);
  const auto d0 = detail::ratio_of_means(pair, Which::f0, Which::f1, Which::f0, samples, rng);
  const auto d1 = detail::ratio_of_means(pair, Which::f1, Which::f1, Which::f0, samples, rng);
  DistanceRatios out;
  out.d0 = d0.value;
  out.d0_prime = 1.0 / d0.value;
  out.se_d0_prime = d0.se / (d0.value * d0.value);
  out.d1 = d1.value;
  out.se_d1 = d1.se;
  out.estimated = true;
  return out;
}

/// Each atom of the convergence and divergence conditions, plus the combined
/// requirement 1 < d0', max(a, c) < d0', ac > d0'.
struct ConditionReport {
  bool a_below_d0p = false;        // a < d0'
  bool c_below_d0p = false;        // c < d0'
  bool a_below_d0p_over_d1 = false;  // a < d0'/d1
  bool a_above_1 = false;
  bool c_above_1 = false;
  bool ac_above_d0p = false;       // ac > d0'
  bool a_above_d0p_over_d1 = false;  // a > d0'/d1
  bool d0p_above_1 = false;
  bool theorem1_satisfied = false;
};

inline ConditionReport check_conditions(const CostParams& p, const DistanceRatios& r) {
  ConditionReport c;
  const double ratio = r.d0_prime / r.d1;
  c.a_below_d0p = p.a < r.d0_prime;
  c.c_below_d0p = p.c < r.d0_prime;
  c.a_below_d0p_over_d1 = p.a < ratio;
  c.a_above_1 = p.a > 1.0;
  c.c_above_1 = p.c > 1.0;
  c.ac_above_d0p = p.a * p.c > r.d0_prime;
  c.a_above_d0p_over_d1 = p.a > ratio;
  c.d0p_above_1 = r.d0_prime > 1.0;
  c.theorem1_satisfied = c.d0p_above_1 && std::max(p.a, p.c) < r.d0_prime && c.ac_above_d0p;
  return c;
}

inline constexpr double kMinSeparation = 1e-6;

/// a = c = d0'^(3/4), the geometric midpoint of (sqrt(d0'), d0').
inline CostParams suggest_params(const DistanceRatios& r, double b_default) {
  if (!(r.d0_prime > 1.0 + kMinSeparation))
    throw IndistinguishableError("suggest_params: d0' <= 1, densities are indistinguishable");
  if (!(b_default > 0.0) || !std::isfinite(b_default))
    throw InputError("suggest_params: b must be positive and finite");
  const double a = std::pow(r.d0_prime, 0.75);
  return {a, b_default, a};
}

/// log sum_{t=first}^{last} exp(t * log_ratio); kLogZero for an empty range.
inline double log_geometric_sum(double log_ratio, std::int64_t first, std::int64_t last) {
  if (last < first) return kLogZero;
  const double count = static_cast<double>(last - first + 1);
  const double head = static_cast<double>(first) * log_ratio;
  if (std::abs(log_ratio) < 1e-12) return head + std::log(count);
  const auto log_expm1_abs = [](double z) {  // log|e^z - 1|
    return z > 0 ? z + std::log(-std::expm1(-z)) : std::log(-std::expm1(z));
  };
  return head + log_expm1_abs(count * log_ratio) - log_expm1_abs(log_ratio);
}

/// Log expected risks with the common posterior factor set to 1.
struct ExpectedRiskPoint {
  std::int64_t n = 0;
  std::int64_t k = 0;
  double same_side = kLogZero;   // choosing the true side's change at k
  double cross_side = kLogZero;  // choosing the opposite side's change at k
  double no_change = kLogZero;   // choosing no change while H_1 holds
};

inline ExpectedRiskPoint expected_risks_at(const CostParams& p, const DistanceRatios& r,
                                           std::int64_t k, std::int64_t n) {
  if (k < 2 || n < k) throw InputError("expected_risks: need 2 <= k <= n");
  const double A = std::log(p.a), B = std::log(p.b), C = std::log(p.c);
  const double D = std::log(r.d0_prime), E = std::log(r.d1);
  const auto f = [](std::int64_t v) { return static_cast<double>(v); };
  const double tail = f(n - k + 1);

  const double same[] = {
      B,
      tail * E + log_geometric_sum(A - D, 1, k - 2),
      B + log_geometric_sum(E, 1, n - k),
      f(k - 1) * (C - D) + tail * E,
      tail * C + f(k - 1) * E + log_geometric_sum(A - D - E, 1, k - 2),
      f(k - 1) * (A - D) + tail * C + log_geometric_sum(E - C, 0, n - k),
  };
  const double cross[] = {
      f(k - 1) * C,
      tail * (C + E) + f(1 - k) * D + log_geometric_sum(A + D, 1, k - 2),
      f(k - 1) * A + tail * E + log_geometric_sum(C, 1, n - k + 1),
      B + f(1 - k) * D + tail * E,
      f(1 - k) * D + log_geometric_sum(A + E + D, 1, k - 2),
      B + f(1 - k) * D + log_geometric_sum(E, 1, n - k),
  };
  const double none[] = {
      B + f(n + 1) * E + log_geometric_sum(-E, 1, n),
      f(n + 1) * A - E + log_geometric_sum(E - A, 2, n),
  };
  return {n, k, log_sum_exp(same), log_sum_exp(cross), log_sum_exp(none)};
}

/// Curves over n in [n_lo, n_hi] at a fixed change time k.
inline std::vector<ExpectedRiskPoint> expected_risk_curves(const CostParams& p,
                                                           const DistanceRatios& r, std::int64_t k,
                                                           std::int64_t n_lo, std::int64_t n_hi) {
  if (k < 2 || n_lo < k || n_hi < n_lo) throw InputError("expected_risk_curves: invalid range");
  std::vector<ExpectedRiskPoint> out;
  out.reserve(static_cast<std::size_t>(n_hi - n_lo + 1));
  for (std::int64_t n = n_lo; n <= n_hi; ++n) out.push_back(expected_risks_at(p, r, k, n));
  return out;
}

/// Curves along the diagonal k = n (the newest change time).
inline std::vector<ExpectedRiskPoint> expected_risk_curves_diagonal(const CostParams& p,
                                                                    const DistanceRatios& r,
                                                                    std::int64_t n_lo,
                                                                    std::int64_t n_hi) {
  if (n_lo < 2 || n_hi < n_lo) throw InputError("expected_risk_curves: invalid range");
  std::vector<ExpectedRiskPoint> out;
  for (std::int64_t n = n_lo; n <= n_hi; ++n) out.push_back(expected_risks_at(p, r, n, n));
  return out;
}

}  // namespace tscd::analysis

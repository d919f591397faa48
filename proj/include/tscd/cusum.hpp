#pragma once

// One-sided CUSUM baseline (known initial state) and Monte-Carlo threshold
// calibration against a per-run false-alarm probability.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "tscd/core.hpp"
#include "tscd/seeding.hpp"
#include "tscd/stats.hpp"

namespace tscd {

/// Raised when a Monte-Carlo calibration cannot reach its target.
class CalibrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

enum class CusumDirection { f0_to_f1, f1_to_f0 };

/// The direction CUSUM should watch for, given the true initial side.
inline constexpr CusumDirection direction_for(Side initial) noexcept {
  return initial == Side::A ? CusumDirection::f0_to_f1 : CusumDirection::f1_to_f0;
}

inline constexpr Which source_density(CusumDirection d) noexcept {
  return d == CusumDirection::f0_to_f1 ? Which::f0 : Which::f1;
}

struct CusumState {
  double s = 0.0;
  double h = 1.0;
  bool alarmed = false;
  std::int64_t n = 0;
  std::optional<std::int64_t> alarm_time;
};

/// s <- max(0, s + llr); the alarm latches at the first n with s >= h.
inline CusumState cusum_step_llr(CusumState st, double llr) noexcept {
  st.s = std::max(0.0, st.s + llr);
  ++st.n;
  if (!st.alarmed && st.s >= st.h) {
    st.alarmed = true;
    st.alarm_time = st.n;
  }
  return st;
}

inline double cusum_llr(const DistributionPair& pair, CusumDirection dir, double x) {
  const double l0 = pair.log_density(Which::f0, x);
  const double l1 = pair.log_density(Which::f1, x);
  return dir == CusumDirection::f0_to_f1 ? l1 - l0 : l0 - l1;
}

inline CusumState cusum_step(const CusumState& st, double x, const DistributionPair& pair,
                             CusumDirection dir) {
  return cusum_step_llr(st, cusum_llr(pair, dir, x));
}

struct ThresholdCalibration {
  double h = 0.0;
  stats::Estimate pfa;
  /// True when no pre-change samples exist (m = 1), so any h gives PFA 0.
  bool boundary = false;
  int iterations = 0;
};

/// Largest CUSUM statistic reached over samples 1..m-1 of each pre-change
/// path. PFA(h) is the fraction of these at or above h.
inline std::vector<double> cusum_prechange_maxima(const DistributionPair& pair, CusumDirection dir,
                                                  std::int64_t m, std::int64_t runs,
                                                  std::uint64_t seed) {
  std::vector<double> maxima(static_cast<std::size_t>(runs), 0.0);
  const Which src = source_density(dir);
  for (std::int64_t r = 0; r < runs; ++r) {
    Rng rng(derive_seed(seed, streams::kCalibrateH, static_cast<std::uint64_t>(r)));
    double s = 0.0, hi = 0.0;
    for (std::int64_t i = 1; i < m; ++i) {
      s = std::max(0.0, s + cusum_llr(pair, dir, pair.sample(src, rng)));
      hi = std::max(hi, s);
    }
    maxima[static_cast<std::size_t>(r)] = hi;
  }
  return maxima;
}

/// Bisection on h over common random numbers until the smallest h with
/// PFA(h) <= target is bracketed; the Wilson 95% interval at the returned h
/// must contain the target.
inline ThresholdCalibration calibrate_threshold(const DistributionPair& pair, CusumDirection dir,
                                                std::int64_t m, double target_pfa,
                                                std::int64_t runs, std::uint64_t seed,
                                                int max_iterations = 200) {
  if (!(target_pfa > 0.0 && target_pfa < 1.0))
    throw InputError("calibrate_threshold: target_pfa must lie in (0, 1)");
  if (runs < 1000) throw InputError("calibrate_threshold: need at least 1000 runs");
  if (m < 1) throw InputError("calibrate_threshold: change time must be >= 1");

  ThresholdCalibration out;
  if (m == 1) {
    out.h = std::numeric_limits<double>::min();
    out.pfa = stats::wilson(0, runs);
    out.boundary = true;
    return out;
  }
  const auto maxima = cusum_prechange_maxima(pair, dir, m, runs, seed);
  const auto pfa_at = [&](double h) {
    return std::count_if(maxima.begin(), maxima.end(), [h](double v) { return v >= h; });
  };
  const auto limit = static_cast<std::int64_t>(std::floor(target_pfa * static_cast<double>(runs)));
  double lo = 0.0;
  double hi = *std::max_element(maxima.begin(), maxima.end()) + 1.0;
  int it = 0;
  for (; it < max_iterations && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pfa_at(mid) <= limit)
      hi = mid;
    else
      lo = mid;
  }
  out.h = hi;
  out.iterations = it;
  out.pfa = stats::wilson(pfa_at(hi), runs);
  if (!out.pfa.ci.contains(target_pfa))
    throw CalibrationError("calibrate_threshold: achieved PFA interval excludes the target");
  return out;
}

}  // namespace tscd

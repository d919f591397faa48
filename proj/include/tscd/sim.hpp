#pragma once

// Monte-Carlo harness: stream generation, trial classification, metric
// aggregation, false-alarm calibration of b, and the SNR sweep against CUSUM.
//
// A run's first detection event ends it. The PFA is the probability that the
// first detection event happens before the change time m; it is applied the
// same way to both detectors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tscd/analysis.hpp"
#include "tscd/core.hpp"
#include "tscd/cusum.hpp"
#include "tscd/detector.hpp"
#include "tscd/seeding.hpp"
#include "tscd/stats.hpp"

namespace tscd::sim {

enum class InitialState { A, B, Random };

struct GeneratedRun {
  Side initial = Side::A;
  /// 1-based index of the first post-change sample; nullopt for no change.
  std::optional<std::int64_t> change_time;
  std::vector<double> samples;
};

/// Samples i < m come from the initial density and i >= m from the other.
inline GeneratedRun generate_run(const DistributionPair& pair, InitialState initial,
                                 std::optional<std::int64_t> m, std::int64_t n_max,
                                 std::uint64_t seed) {
  if (n_max < 1) throw InputError("generate_run: n_max must be >= 1");
  if (m && (*m < 1 || *m > n_max)) throw InputError("generate_run: need 1 <= m <= n_max");
  Rng rng(seed);
  GeneratedRun run;
  if (initial == InitialState::Random)
    run.initial = std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? Side::A : Side::B;
  else
    run.initial = initial == InitialState::A ? Side::A : Side::B;
  run.change_time = m;
  run.samples.reserve(static_cast<std::size_t>(n_max));
  const Which pre = initial_density(run.initial);
  for (std::int64_t i = 1; i <= n_max; ++i) {
    const bool post = m && i >= *m;
    run.samples.push_back(pair.sample(post ? other(pre) : pre, rng));
  }
  return run;
}

enum class Classification { no_detection, false_alarm, correct_detection, incorrect_detection };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::no_detection: return "no_detection";
    case Classification::false_alarm: return "false_alarm";
    case Classification::correct_detection: return "correct_detection";
    case Classification::incorrect_detection: return "incorrect_detection";
  }
  return "?";
}

struct TrialOutcome {
  Side true_initial = Side::A;
  std::optional<std::int64_t> true_change_time;
  std::optional<std::int64_t> detection_time;
  std::optional<Side> declared_side;
  Classification classification = Classification::no_detection;
  /// n - m for correct detections.
  std::optional<std::int64_t> delay;
  /// Declared change direction opposite the true initial side (set for
  /// incorrect detections and for wrong-sided false alarms).
  bool wrong_side = false;
};

inline TrialOutcome classify(Side initial, std::optional<std::int64_t> m,
                             std::optional<std::int64_t> detection_time,
                             std::optional<Side> declared) {
  TrialOutcome o;
  o.true_initial = initial;
  o.true_change_time = m;
  o.detection_time = detection_time;
  o.declared_side = declared;
  if (!detection_time) return o;
  o.wrong_side = declared && *declared != initial;
  if (!m || *detection_time < *m) {
    o.classification = Classification::false_alarm;
  } else if (o.wrong_side) {
    o.classification = Classification::incorrect_detection;
  } else {
    o.classification = Classification::correct_detection;
    o.delay = *detection_time - *m;
  }
  return o;
}

/// First n whose minimum-risk hypothesis is a change, with its side.
struct DetectionEvent {
  std::int64_t n = 0;
  Side side = Side::A;
};

inline std::optional<DetectionEvent> first_detection(Detector& det,
                                                     std::span<const double> samples) {
  for (double x : samples) {
    const auto rep = det.step(x);
    if (rep.decision.winner.is_change()) return DetectionEvent{det.n(), rep.decision.winner.side};
  }
  return std::nullopt;
}

inline TrialOutcome run_trial(const DistributionPair& pair, const CostParams& params,
                              const GeneratedRun& run) {
  Detector det(pair, params);
  const auto ev = first_detection(det, run.samples);
  if (!ev) return classify(run.initial, run.change_time, std::nullopt, std::nullopt);
  return classify(run.initial, run.change_time, ev->n, ev->side);
}

/// Per-direction CUSUM thresholds.
struct CusumThresholds {
  double f0_to_f1 = 1.0;
  double f1_to_f0 = 1.0;
  double for_side(Side s) const noexcept { return s == Side::A ? f0_to_f1 : f1_to_f0; }
};

/// CUSUM is handed the true initial state, so it only watches the correct
/// direction and always declares the correct side.
inline TrialOutcome run_trial_cusum(const DistributionPair& pair, const CusumThresholds& h,
                                    const GeneratedRun& run) {
  const CusumDirection dir = direction_for(run.initial);
  CusumState st;
  st.h = h.for_side(run.initial);
  for (double x : run.samples) {
    st = cusum_step(st, x, pair, dir);
    if (st.alarmed) return classify(run.initial, run.change_time, st.alarm_time, run.initial);
  }
  return classify(run.initial, run.change_time, std::nullopt, std::nullopt);
}

/// Runs fn(i) for i in [0, count) on up to hardware_concurrency threads.
/// Work assignment is static, so results written by index are schedule-independent.
inline void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& fn) {
  const auto hw = static_cast<std::int64_t>(std::max(1u, std::thread::hardware_concurrency()));
  const std::int64_t workers = std::min(hw, std::max<std::int64_t>(count, 1));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::int64_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::int64_t i = w; i < count; i += workers) fn(i);
    });
}

enum class DetectorKind { TwoSided, Cusum };

struct MonteCarloConfig {
  DistributionPair pair = DistributionPair::gaussian_mean_shift(1.0, 1.0);
  CostParams params{};
  std::optional<std::int64_t> m = 500;
  std::int64_t n_max = 1000;
  std::int64_t runs = 2000;
  std::uint64_t master_seed = 1;
  InitialState initial = InitialState::Random;
  DetectorKind kind = DetectorKind::TwoSided;
  CusumThresholds cusum{};
};

inline std::string describe(const MonteCarloConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "kind=" << (c.kind == DetectorKind::TwoSided ? "two_sided" : "cusum");
  if (c.pair.is_gaussian())
    os << ";pair=gauss(" << c.pair.mean(Which::f0) << "," << c.pair.mean(Which::f1) << ","
       << c.pair.sigma() << ")";
  else
    os << ";pair=custom";
  os << ";a=" << c.params.a << ";b=" << c.params.b << ";c=" << c.params.c;
  os << ";m=" << (c.m ? std::to_string(*c.m) : "inf") << ";n_max=" << c.n_max
     << ";runs=" << c.runs << ";seed=" << c.master_seed
     << ";initial=" << static_cast<int>(c.initial) << ";h=" << c.cusum.f0_to_f1 << ","
     << c.cusum.f1_to_f0;
  return os.str();
}

/// FNV-1a over the configuration description.
inline std::uint64_t digest(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Metrics {
  stats::Estimate pfa;
  stats::Estimate p_incorrect;             // incorrect detections at n >= m
  stats::Estimate p_incorrect_pre_change;  // wrong-sided false alarms
  stats::Estimate p_correct;
  stats::Estimate p_no_detection;
  /// Over correct detections only.
  stats::Estimate mean_delay;
  std::int64_t runs = 0;
  std::uint64_t config_digest = 0;
};

inline Metrics aggregate(std::span<const TrialOutcome> outcomes, std::uint64_t config_digest = 0) {
  std::int64_t fa = 0, inc = 0, inc_pre = 0, ok = 0, none = 0;
  std::vector<double> delays;
  for (const auto& o : outcomes) {
    switch (o.classification) {
      case Classification::false_alarm:
        ++fa;
        if (o.wrong_side) ++inc_pre;
        break;
      case Classification::incorrect_detection: ++inc; break;
      case Classification::correct_detection:
        ++ok;
        delays.push_back(static_cast<double>(*o.delay));
        break;
      case Classification::no_detection: ++none; break;
    }
  }
  const auto n = static_cast<std::int64_t>(outcomes.size());
  Metrics m;
  m.runs = n;
  m.pfa = stats::wilson(fa, n);
  m.p_incorrect = stats::wilson(inc, n);
  m.p_incorrect_pre_change = stats::wilson(inc_pre, n);
  m.p_correct = stats::wilson(ok, n);
  m.p_no_detection = stats::wilson(none, n);
  m.mean_delay = stats::mean_t(delays);
  m.config_digest = config_digest;
  return m;
}

inline std::vector<TrialOutcome> monte_carlo_outcomes(const MonteCarloConfig& cfg) {
  if (cfg.runs < 1) throw InputError("monte_carlo: runs must be positive");
  if (cfg.kind == DetectorKind::TwoSided) cfg.params.validate();
  std::vector<TrialOutcome> out(static_cast<std::size_t>(cfg.runs));
  parallel_for(cfg.runs, [&](std::int64_t r) {
    const auto run = generate_run(cfg.pair, cfg.initial, cfg.m, cfg.n_max,
                                  derive_seed(cfg.master_seed, streams::kDelayRuns,
                                              static_cast<std::uint64_t>(r)));
    out[static_cast<std::size_t>(r)] = cfg.kind == DetectorKind::TwoSided
                                           ? run_trial(cfg.pair, cfg.params, run)
                                           : run_trial_cusum(cfg.pair, cfg.cusum, run);
  });
  return out;
}

inline Metrics monte_carlo(const MonteCarloConfig& cfg) {
  if (cfg.runs < 100) throw InputError("monte_carlo: need at least 100 runs");
  const auto outcomes = monte_carlo_outcomes(cfg);
  return aggregate(outcomes, digest(describe(cfg)));
}

/// Pre-change paths (samples 1..m-1) stored as log densities for reuse across
/// calibration candidates.
struct PrechangePaths {
  std::int64_t length = 0;
  std::vector<double> lf0, lf1;  // row-major, runs x length
  std::vector<Side> initial;
};

inline PrechangePaths make_prechange_paths(const DistributionPair& pair, InitialState initial,
                                           std::int64_t m, std::int64_t runs,
                                           std::uint64_t master_seed, std::uint64_t stream) {
  PrechangePaths p;
  p.length = m - 1;
  const auto len = static_cast<std::size_t>(p.length);
  p.lf0.resize(len * static_cast<std::size_t>(runs));
  p.lf1.resize(len * static_cast<std::size_t>(runs));
  p.initial.resize(static_cast<std::size_t>(runs));
  for (std::int64_t r = 0; r < runs; ++r) {
    // Same seeds as generate_run on this stream, so paths match a full run's prefix.
    const auto run = generate_run(pair, initial, std::nullopt, std::max<std::int64_t>(p.length, 1),
                                  derive_seed(master_seed, stream, static_cast<std::uint64_t>(r)));
    p.initial[static_cast<std::size_t>(r)] = run.initial;
    for (std::size_t i = 0; i < len; ++i) {
      p.lf0[static_cast<std::size_t>(r) * len + i] = pair.log_density(Which::f0, run.samples[i]);
      p.lf1[static_cast<std::size_t>(r) * len + i] = pair.log_density(Which::f1, run.samples[i]);
    }
  }
  return p;
}

/// Number of paths on which the two-sided detector declares a change before m.
inline std::int64_t count_false_alarms(const DistributionPair& pair, const CostParams& params,
                                       const PrechangePaths& paths) {
  const auto runs = static_cast<std::int64_t>(paths.initial.size());
  const auto len = static_cast<std::size_t>(paths.length);
  std::vector<char> alarm(static_cast<std::size_t>(runs), 0);
  parallel_for(runs, [&](std::int64_t r) {
    Detector det(pair, params);
    const std::size_t base = static_cast<std::size_t>(r) * len;
    for (std::size_t i = 0; i < len; ++i) {
      if (det.step_log_densities(paths.lf0[base + i], paths.lf1[base + i])
              .decision.winner.is_change()) {
        alarm[static_cast<std::size_t>(r)] = 1;
        return;
      }
    }
  });
  return std::count(alarm.begin(), alarm.end(), 1);
}

struct BCalibration {
  double b = 0.0;
  stats::Estimate pfa;
  int iterations = 0;
};

/// Bisection on log b over common random numbers: returns the smallest b
/// (to a relative tolerance) whose measured PFA is at most the target, and
/// requires the Wilson 95% interval there to contain the target. Uses
/// cfg.pair, cfg.params.a/c, cfg.m, cfg.runs, cfg.master_seed, cfg.initial.
inline BCalibration calibrate_b(const MonteCarloConfig& cfg, double target_pfa, double b_lo,
                                double b_hi, double log_tolerance = 1e-3) {
  if (!(target_pfa > 0.0 && target_pfa < 1.0))
    throw InputError("calibrate_b: target_pfa must lie in (0, 1)");
  if (!(b_lo > 0.0) || !(b_hi > b_lo) || !std::isfinite(b_hi))
    throw InputError("calibrate_b: need 0 < b_lo < b_hi < inf");
  if (!cfg.m || *cfg.m < 2) throw InputError("calibrate_b: need a change time m >= 2");
  CostParams p = cfg.params;
  p.b = b_lo;
  p.validate();

  const auto paths =
      make_prechange_paths(cfg.pair, cfg.initial, *cfg.m, cfg.runs, cfg.master_seed,
                           streams::kCalibrateB);
  const auto limit =
      static_cast<std::int64_t>(std::floor(target_pfa * static_cast<double>(cfg.runs)));
  const auto alarms_at = [&](double log_b) {
    p.b = std::exp(log_b);
    return count_false_alarms(cfg.pair, p, paths);
  };

  BCalibration out;
  double lo = std::log(b_lo), hi = std::log(b_hi);
  std::int64_t hi_count = alarms_at(hi);
  if (hi_count > limit)
    throw CalibrationError("calibrate_b: target PFA unreachable below the upper b bound");
  const std::int64_t lo_count = alarms_at(lo);
  if (lo_count <= limit) {
    hi = lo;
    hi_count = lo_count;
  } else {
    while (hi - lo > log_tolerance && out.iterations < 200) {
      const double mid = 0.5 * (lo + hi);
      const auto cnt = alarms_at(mid);
      if (cnt <= limit) {
        hi = mid;
        hi_count = cnt;
      } else {
        lo = mid;
      }
      ++out.iterations;
    }
  }
  out.b = std::exp(hi);
  out.pfa = stats::wilson(hi_count, cfg.runs);
  if (!out.pfa.ci.contains(target_pfa))
    throw CalibrationError("calibrate_b: target PFA unreachable within the b bounds");
  return out;
}

struct SweepConfig {
  std::vector<double> snr_db{-6.0, -3.0, 0.0, 3.0};
  double target_pfa = 0.05;
  std::int64_t m = 500;
  std::int64_t n_max = 1000;
  std::int64_t runs = 2000;
  /// Runs used by each calibration (b and both CUSUM directions).
  std::int64_t calibration_runs = 2000;
  std::uint64_t master_seed = 1;
  /// Fixed a = c; nullopt uses analysis::suggest_params.
  std::optional<double> a;
  std::optional<double> c;
  /// Fixed b; nullopt calibrates b to target_pfa.
  std::optional<double> b;
  double b_lo = 1e-2;
  double b_hi = 1e12;
};

struct SweepRow {
  double snr_db = 0.0;
  CostParams params;
  BCalibration b_calibration;
  ThresholdCalibration h_f0_to_f1, h_f1_to_f0;
  Metrics two_sided;
  Metrics cusum;
  double ratio = 0.0;  // two-sided mean delay / CUSUM mean delay
  stats::Interval ratio_ci;
};

/// Cost parameters for one SNR point: fixed a/c when given, otherwise the
/// suggested rule; b fixed or calibrated.
inline CostParams resolve_params(const SweepConfig& sc, const DistributionPair& pair) {
  const auto ratios = analysis::distance_ratios(pair);
  CostParams p{};
  if (!sc.a || !sc.c) {
    const auto s = analysis::suggest_params(ratios, sc.b.value_or(1e4));
    p.a = s.a;
    p.c = s.c;
  }
  if (sc.a) p.a = *sc.a;
  if (sc.c) p.c = *sc.c;
  p.b = sc.b.value_or(1e4);
  return p;
}

inline std::uint64_t point_seed(std::uint64_t master, std::size_t idx) {
  return mix64(master + 0x51ed27ULL * (idx + 1));
}

inline SweepRow sweep_point(const SweepConfig& sc, std::size_t idx) {
  SweepRow row;
  row.snr_db = sc.snr_db[idx];
  const auto pair = DistributionPair::from_snr_db(row.snr_db);
  const std::uint64_t seed = point_seed(sc.master_seed, idx);
  row.params = resolve_params(sc, pair);

  MonteCarloConfig mc;
  mc.pair = pair;
  mc.params = row.params;
  mc.m = sc.m;
  mc.n_max = sc.n_max;
  mc.runs = sc.calibration_runs;
  mc.master_seed = seed;
  if (!sc.b) {
    row.b_calibration = calibrate_b(mc, sc.target_pfa, sc.b_lo, sc.b_hi);
    row.params.b = row.b_calibration.b;
  } else {
    row.b_calibration.b = *sc.b;
  }
  row.h_f0_to_f1 = calibrate_threshold(pair, CusumDirection::f0_to_f1, sc.m, sc.target_pfa,
                                       sc.calibration_runs, seed);
  row.h_f1_to_f0 = calibrate_threshold(pair, CusumDirection::f1_to_f0, sc.m, sc.target_pfa,
                                       sc.calibration_runs, seed);

  // Both detectors see identical delay-run sample paths.
  mc.params = row.params;
  mc.runs = sc.runs;
  mc.cusum = {row.h_f0_to_f1.h, row.h_f1_to_f0.h};
  std::vector<TrialOutcome> ts(static_cast<std::size_t>(sc.runs)), cu(ts.size());
  parallel_for(sc.runs, [&](std::int64_t r) {
    const auto run = generate_run(pair, InitialState::Random, sc.m, sc.n_max,
                                  derive_seed(seed, streams::kDelayRuns,
                                              static_cast<std::uint64_t>(r)));
    ts[static_cast<std::size_t>(r)] = run_trial(pair, row.params, run);
    cu[static_cast<std::size_t>(r)] = run_trial_cusum(pair, mc.cusum, run);
  });
  mc.kind = DetectorKind::TwoSided;
  row.two_sided = aggregate(ts, digest(describe(mc)));
  mc.kind = DetectorKind::Cusum;
  row.cusum = aggregate(cu, digest(describe(mc)));

  const double t = row.two_sided.mean_delay.value, c = row.cusum.mean_delay.value;
  row.ratio = t / c;
  // Delta-method interval treating the two means as independent.
  const double z = stats::normal_quantile(0.975);
  const double se_t = row.two_sided.mean_delay.se, se_c = row.cusum.mean_delay.se;
  const double se_r = row.ratio * std::sqrt((se_t * se_t) / (t * t) + (se_c * se_c) / (c * c));
  row.ratio_ci = {row.ratio - z * se_r, row.ratio + z * se_r};
  return row;
}

inline std::vector<SweepRow> snr_sweep(const SweepConfig& sc) {
  std::vector<SweepRow> rows;
  rows.reserve(sc.snr_db.size());
  for (std::size_t i = 0; i < sc.snr_db.size(); ++i) rows.push_back(sweep_point(sc, i));
  return rows;
}

}  // namespace tscd::sim

#pragma once

// CSV emission for risk traces, Monte-Carlo metrics, sweeps, and condition
// reports. Risks are written in the log domain.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tscd/analysis.hpp"
#include "tscd/detector.hpp"
#include "tscd/sim.hpp"

namespace tscd::io {

struct TraceRow {
  std::int64_t n = 0;
  double r1 = 0, r1bar = 0, rk = 0, rkbar = 0;
  std::int64_t k_a = 0, k_b = 0;
  HypothesisLabel winner;
};

inline TraceRow trace_row(std::int64_t n, const Decision& d) {
  return {n,
          d.risks[0],
          d.risks[1],
          d.risks[2],
          d.risks[3],
          d.argmin_change_indices[0],
          d.argmin_change_indices[1],
          d.winner};
}

/// Runs a fresh detector over `samples`, one row per step.
inline std::vector<TraceRow> trace(const DistributionPair& pair, const CostParams& params,
                                   std::span<const double> samples) {
  Detector det(pair, params);
  std::vector<TraceRow> rows;
  rows.reserve(samples.size());
  for (double x : samples) {
    const auto rep = det.step(x);
    rows.push_back(trace_row(det.n(), rep.decision));
  }
  return rows;
}

inline constexpr const char* kTraceHeader = "n,R1,R1bar,Rk,kA,Rkbar,kB,winner";
inline constexpr const char* kMetricsHeader =
    "snr_db,detector,pfa,pfa_ci_lo,pfa_ci_hi,p_incorrect,mean_delay,delay_ci_lo,delay_ci_hi,runs";
inline constexpr const char* kSweepHeader =
    "snr_db,two_sided_delay,two_sided_delay_ci_lo,two_sided_delay_ci_hi,cusum_delay,"
    "cusum_delay_ci_lo,cusum_delay_ci_hi,ratio";

namespace detail {
inline void num(std::ostream& os, double v) {
  if (std::isnan(v))
    os << "nan";
  else if (std::isinf(v))
    os << (v > 0 ? "inf" : "-inf");
  else
    os << std::setprecision(17) << v;
}
}  // namespace detail

inline void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows) {
  os << kTraceHeader << '\n';
  for (const auto& r : rows) {
    os << r.n << ',';
    detail::num(os, r.r1);
    os << ',';
    detail::num(os, r.r1bar);
    os << ',';
    detail::num(os, r.rk);
    os << ',' << r.k_a << ',';
    detail::num(os, r.rkbar);
    os << ',' << r.k_b << ',' << to_string(r.winner) << '\n';
  }
}

/// gnuplot script plotting the four risks of a trace CSV against n.
inline void write_gnuplot_script(std::ostream& os, const std::string& csv_path,
                                 std::int64_t change_time) {
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set xlabel 'n'\n"
     << "set ylabel 'log risk'\n";
  if (change_time > 0)
    os << "set arrow from " << change_time << ", graph 0 to " << change_time
       << ", graph 1 nohead dt 2\n";
  os << "plot '" << csv_path << "' using 1:2 with lines title 'R_1', \\\n"
     << "     '' using 1:3 with lines title 'R_1bar', \\\n"
     << "     '' using 1:4 with lines title 'min R_k', \\\n"
     << "     '' using 1:6 with lines title 'min R_kbar'\n";
}

inline void write_metrics_header(std::ostream& os) { os << kMetricsHeader << '\n'; }

inline void write_metrics_row(std::ostream& os, double snr_db, const std::string& detector,
                              const sim::Metrics& m) {
  detail::num(os, snr_db);
  os << ',' << detector << ',';
  detail::num(os, m.pfa.value);
  os << ',';
  detail::num(os, m.pfa.ci.lo);
  os << ',';
  detail::num(os, m.pfa.ci.hi);
  os << ',';
  detail::num(os, m.p_incorrect.value);
  os << ',';
  detail::num(os, m.mean_delay.value);
  os << ',';
  detail::num(os, m.mean_delay.ci.lo);
  os << ',';
  detail::num(os, m.mean_delay.ci.hi);
  os << ',' << m.runs << '\n';
}

inline void write_sweep_csv(std::ostream& os, std::span<const sim::SweepRow> rows) {
  os << kSweepHeader << '\n';
  for (const auto& r : rows) {
    for (double v : {r.snr_db, r.two_sided.mean_delay.value, r.two_sided.mean_delay.ci.lo,
                     r.two_sided.mean_delay.ci.hi, r.cusum.mean_delay.value,
                     r.cusum.mean_delay.ci.lo, r.cusum.mean_delay.ci.hi}) {
      detail::num(os, v);
      os << ',';
    }
    detail::num(os, r.ratio);
    os << '\n';
  }
}

struct ConditionAtom {
  const char* name;
  bool pass;
};

inline std::vector<ConditionAtom> atoms(const analysis::ConditionReport& c) {
  return {{"a < d0'", c.a_below_d0p},
          {"c < d0'", c.c_below_d0p},
          {"a < d0'/d1", c.a_below_d0p_over_d1},
          {"a > 1", c.a_above_1},
          {"c > 1", c.c_above_1},
          {"ac > d0'", c.ac_above_d0p},
          {"a > d0'/d1", c.a_above_d0p_over_d1},
          {"d0' > 1", c.d0p_above_1},
          {"theorem1 (1<d0', max(a,c)<d0', ac>d0')", c.theorem1_satisfied}};
}

inline void write_condition_table(std::ostream& os, double snr_db, const CostParams& p,
                                  const analysis::DistanceRatios& r,
                                  const analysis::ConditionReport& c) {
  os << std::setprecision(6) << "SNR " << snr_db << " dB: d0' = " << r.d0_prime
     << ", d1 = " << r.d1 << ", a = " << p.a << ", c = " << p.c << ", b = " << p.b << '\n';
  for (const auto& a : atoms(c))
    os << "  " << std::left << std::setw(42) << a.name << (a.pass ? "pass" : "FAIL") << '\n';
}

inline constexpr const char* kConditionHeader = "snr_db,d0_prime,d1,a,c,condition,pass";

inline void write_condition_csv_rows(std::ostream& os, double snr_db, const CostParams& p,
                                     const analysis::DistanceRatios& r,
                                     const analysis::ConditionReport& c) {
  for (const auto& a : atoms(c)) {
    for (double v : {snr_db, r.d0_prime, r.d1, p.a, p.c}) {
      detail::num(os, v);
      os << ',';
    }
    os << '"' << a.name << "\"," << (a.pass ? 1 : 0) << '\n';
  }
}

}  // namespace tscd::io

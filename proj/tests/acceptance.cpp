// Acceptance suite. Prints one PASS/FAIL line per criterion; exits non-zero
// if any selected criterion fails. `--criterion N` runs a single one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tscd/analysis.hpp"
#include "tscd/core.hpp"
#include "tscd/cusum.hpp"
#include "tscd/detector.hpp"
#include "tscd/oracle.hpp"
#include "tscd/seeding.hpp"
#include "tscd/sim.hpp"
#include "tscd/stats.hpp"

using namespace tscd;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kOracleRelTol = 1e-9;
constexpr double kOracleSeconds = 60.0;
constexpr double kTraceSeconds = 120.0;
constexpr double kDecaySeconds = 300.0;
constexpr double kSweepSeconds = 900.0;
constexpr double kPfaTarget = 0.05;
constexpr double kPfaBand = 0.01;
constexpr double kDelayRatioLimit = 1.10;
constexpr double kStepTimeRatioLimit = 2.0;

const CostParams kRef{1.45, 1e4, 1.45};

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel_log_err(double x, double y) {
  if (x == y) return 0.0;
  return std::abs(x - y) / std::max(std::abs(y), 1.0);
}

// Shared corpus for criteria 1 and 2: SNR cycles through 0, 3, 6 dB, the
// initial side alternates, every fifth stream has no change.
struct CorpusStream {
  double snr_db;
  DistributionPair pair;
  sim::GeneratedRun run;
};

std::vector<CorpusStream> oracle_corpus() {
  std::vector<CorpusStream> out;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const double snr = std::array{0.0, 3.0, 6.0}[s % 3];
    const auto pair = DistributionPair::from_snr_db(snr);
    const auto init = s % 2 == 0 ? sim::InitialState::A : sim::InitialState::B;
    std::optional<std::int64_t> m;
    if (s % 5 != 0) m = 2 + static_cast<std::int64_t>(mix64(s + 977) % 49);
    auto run = sim::generate_run(pair, init, m, 50, derive_seed(2025, streams::kValidation, s));
    out.push_back({snr, pair, std::move(run)});
  }
  return out;
}

Verdict criterion1() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::int64_t checks = 0;
  for (const auto& cs : oracle_corpus()) {
    Detector det(cs.pair, kRef);
    for (std::size_t n = 1; n <= cs.run.samples.size(); ++n) {
      const auto d = det.step(cs.run.samples[n - 1]).decision;
      const auto r = oracle::exact_risks(
          cs.pair, std::span<const double>(cs.run.samples.data(), n), kRef);
      const auto nn = static_cast<std::int64_t>(n);
      std::vector<std::pair<double, double>> pairs{{d.risks[0], r.at(Side::A, 1)},
                                                   {d.risks[1], r.at(Side::B, 1)}};
      if (nn >= 2) {
        for (Side s : {Side::A, Side::B}) {
          const auto& acc = det.state().of(s);
          pairs.emplace_back(acc.newest_risk(), r.at(s, nn));
          pairs.emplace_back(acc.tracked_risk(), r.at(s, acc.k));
        }
      }
      for (const auto& [x, y] : pairs) {
        worst = std::max(worst, rel_log_err(x, y));
        ++checks;
      }
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << checks << " risk comparisons, max relative log error " << std::scientific
     << std::setprecision(2) << worst << " (tol " << kOracleRelTol << "), " << std::fixed
     << std::setprecision(1) << secs << " s";
  return {worst <= kOracleRelTol && secs < kOracleSeconds, os.str()};
}

Verdict criterion2() {
  const auto corpus = oracle_corpus();
  std::ofstream csv("c2_tracking_counterexamples.csv");
  csv << "stream,snr_db,initial,change_time,n,side,tracked_k,tracked_risk,true_k,true_min_risk,"
         "log_gap\n";
  std::int64_t steps = 0, disagreements = 0, winner_changes = 0;
  double worst_gap = 0.0;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto& cs = corpus[s];
    Detector det(cs.pair, kRef);
    for (std::size_t n = 1; n <= cs.run.samples.size(); ++n) {
      const auto d = det.step(cs.run.samples[n - 1]).decision;
      if (n < 2) continue;
      const auto r = oracle::exact_risks(
          cs.pair, std::span<const double>(cs.run.samples.data(), n), kRef);
      const auto truth = oracle::exact_argmin(r);
      for (std::size_t side = 0; side < 2; ++side) {
        ++steps;
        const double got = d.risks[2 + side];
        const double want = truth.risks[2 + side];
        const bool same_k = d.argmin_change_indices[side] == truth.argmin_change_indices[side];
        if (rel_log_err(got, want) <= kOracleRelTol && same_k) continue;
        ++disagreements;
        worst_gap = std::max(worst_gap, got - want);
        csv << s << ',' << cs.snr_db << ',' << side_char(cs.run.initial) << ','
            << (cs.run.change_time ? std::to_string(*cs.run.change_time) : "none") << ',' << n
            << ',' << (side == 0 ? 'A' : 'B') << ',' << d.argmin_change_indices[side] << ','
            << std::setprecision(17) << got << ',' << truth.argmin_change_indices[side] << ','
            << want << ',' << got - want << '\n';
      }
      winner_changes += !(d.winner == truth.winner);
    }
  }
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * (steps - disagreements) / steps
     << "% agreement (" << disagreements << " of " << steps
     << " side-steps disagree, max log gap " << worst_gap << "; overall winner differs on "
     << winner_changes << " steps); counterexamples in c2_tracking_counterexamples.csv";
  return {disagreements == 0, os.str()};
}

Verdict criterion3() {
  const auto t0 = Clock::now();
  const auto pair = DistributionPair::from_snr_db(3.0);
  constexpr std::int64_t m = 100, n_max = 300, runs = 500;
  std::int64_t pre_steps = 0, pre_no_change = 0, detected = 0, incorrect = 0;
  std::vector<double> delays;
  for (std::int64_t r = 0; r < runs; ++r) {
    const auto run = sim::generate_run(pair, sim::InitialState::A, m, n_max,
                                       derive_seed(3, streams::kTrace, static_cast<std::uint64_t>(r)));
    Detector det(pair, kRef);
    bool found = false, wrong = false;
    for (std::int64_t n = 1; n <= n_max; ++n) {
      const auto w = det.step(run.samples[n - 1]).decision.winner;
      if (n > 20 && n < m) {
        ++pre_steps;
        pre_no_change += !w.is_change();
      }
      if (n >= m && !found && w.is_change()) {
        if (w.side == Side::A) {
          found = true;
          delays.push_back(static_cast<double>(n - m));
        } else {
          wrong = true;
        }
      }
    }
    detected += found;
    incorrect += wrong;
  }
  const double frac_pre = static_cast<double>(pre_no_change) / pre_steps;
  const auto delay = stats::mean_t(delays);
  const double p_inc = static_cast<double>(incorrect) / runs;
  const double secs = seconds_since(t0);
  const bool ok = frac_pre >= 0.95 && detected == runs && delay.value < 30.0 && p_inc < 0.02 &&
                  secs < kTraceSeconds;
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << "(i) no-change winner on " << frac_pre
     << " of steps 21..99; (ii) side-A detection in " << detected << "/" << runs
     << " runs, mean delay " << std::setprecision(2) << delay.value << " [" << delay.ci.lo << ", "
     << delay.ci.hi << "]; (iii) incorrect in " << std::setprecision(4) << p_inc
     << " of runs; " << std::setprecision(1) << secs << " s";
  return {ok, os.str()};
}

// Wrong-sided first detections under calibrated b, for one a = c.
struct WrongSideProfile {
  double a = 0.0, b = 0.0;
  std::int64_t runs = 0, wrong = 0;
  std::vector<std::int64_t> bins;  // wrong-sided detections per time bin
};

WrongSideProfile wrong_side_profile(const DistributionPair& pair, double a, std::int64_t m,
                                    std::int64_t n_max, std::int64_t runs, std::int64_t bin) {
  sim::MonteCarloConfig mc;
  mc.pair = pair;
  mc.params = {a, 1e4, a};
  mc.m = m;
  mc.n_max = n_max;
  mc.runs = 4000;
  mc.master_seed = 5;
  mc.initial = sim::InitialState::Random;
  WrongSideProfile p;
  p.a = a;
  p.b = sim::calibrate_b(mc, kPfaTarget, 1e-2, 1e12).b;
  mc.params.b = p.b;
  mc.runs = runs;
  mc.master_seed = 6;
  p.runs = runs;
  p.bins.assign(static_cast<std::size_t>((n_max + bin - 1) / bin), 0);
  for (const auto& o : sim::monte_carlo_outcomes(mc)) {
    if (!o.wrong_side) continue;
    ++p.wrong;
    ++p.bins[static_cast<std::size_t>((*o.detection_time - 1) / bin)];
  }
  return p;
}

Verdict criterion4() {
  const auto t0 = Clock::now();
  const auto pair = DistributionPair::from_snr_db(0.0);
  const auto ratios = analysis::distance_ratios(pair);
  const double a_ok = analysis::suggest_params(ratios, 1e4).a;
  const double a_bad = 0.93 * std::sqrt(ratios.d0_prime);  // a*c < d0'
  const bool ok_sat = analysis::check_conditions({a_ok, 1e4, a_ok}, ratios).theorem1_satisfied;
  const bool bad_viol = !analysis::check_conditions({a_bad, 1e4, a_bad}, ratios).ac_above_d0p;
  constexpr std::int64_t m = 200, n_max = 260, runs = 20000, bin = 5;
  const auto sat = wrong_side_profile(pair, a_ok, m, n_max, runs, bin);
  const auto vio = wrong_side_profile(pair, a_bad, m, n_max, runs, bin);

  // Geometric decay: weighted fit of log frequency per bin from the peak bin
  // up to the change time. Empty bins get a half count.
  const auto peak = static_cast<std::size_t>(
      std::max_element(sat.bins.begin(), sat.bins.end()) - sat.bins.begin());
  std::vector<double> x, y, w;
  for (std::size_t i = peak; i < static_cast<std::size_t>(m / bin); ++i) {
    const double cnt = sat.bins[i] > 0 ? static_cast<double>(sat.bins[i]) : 0.5;
    x.push_back((static_cast<double>(i) + 0.5) * bin);
    y.push_back(std::log(cnt / static_cast<double>(runs * bin)));
    w.push_back(cnt);
  }
  const auto fit = stats::weighted_fit(x, y, w);
  const bool decays = fit.slope_ci.hi < 0.0;

  // One-sided two-proportion z-test: violating > satisfying.
  const double p1 = static_cast<double>(sat.wrong) / runs;
  const double p2 = static_cast<double>(vio.wrong) / runs;
  const double pp = (p1 + p2) / 2.0;
  const double z = (p2 - p1) / std::sqrt(pp * (1 - pp) * 2.0 / runs);
  const bool higher = z > stats::normal_quantile(0.95);
  const double secs = seconds_since(t0);

  std::ostringstream os;
  os << std::setprecision(4) << "0 dB, d0'=" << ratios.d0_prime << "; a=c=" << a_ok
     << " (b=" << std::setprecision(5) << sat.b << "): log-frequency slope " << std::setprecision(4)
     << fit.slope << " per sample, 95% CI [" << fit.slope_ci.lo << ", " << fit.slope_ci.hi
     << "]; wrong-sided rate " << p1 << " vs " << p2 << " at violating a=c=" << a_bad
     << " (b=" << std::setprecision(5) << vio.b << "), z=" << std::setprecision(3) << z << "; "
     << std::setprecision(1) << std::fixed << secs << " s";
  return {ok_sat && bad_viol && decays && higher && secs < kDecaySeconds, os.str()};
}

Verdict criterion5() {
  const auto t0 = Clock::now();
  sim::SweepConfig sc;
  sc.snr_db = {-6.0, -3.0, 0.0, 3.0};
  sc.m = 500;
  sc.n_max = 1500;
  sc.runs = 4000;
  sc.calibration_runs = 20000;
  sc.master_seed = 55;
  const auto rows = sim::snr_sweep(sc);
  const auto& r6 = rows.front();
  const bool pfa_ok = std::abs(r6.two_sided.pfa.value - kPfaTarget) <= kPfaBand &&
                      std::abs(r6.cusum.pfa.value - kPfaTarget) <= kPfaBand;
  const bool ratio_ok = r6.ratio <= kDelayRatioLimit;
  const bool enough_runs = r6.two_sided.runs >= 2000 && r6.cusum.runs >= 2000;
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    monotone = monotone && rows[i].two_sided.mean_delay.value < rows[i - 1].two_sided.mean_delay.value;
    monotone = monotone && rows[i].cusum.mean_delay.value < rows[i - 1].cusum.mean_delay.value;
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << "-6 dB: PFA two-sided " << r6.two_sided.pfa.value
     << ", CUSUM " << r6.cusum.pfa.value << "; delay " << std::setprecision(2)
     << r6.two_sided.mean_delay.value << " vs " << r6.cusum.mean_delay.value << ", ratio "
     << std::setprecision(3) << r6.ratio << " [" << r6.ratio_ci.lo << ", " << r6.ratio_ci.hi
     << "] (limit " << kDelayRatioLimit << "); delays by SNR:";
  for (const auto& r : rows)
    os << ' ' << std::setprecision(2) << r.two_sided.mean_delay.value << '/'
       << r.cusum.mean_delay.value;
  os << (monotone ? " (decreasing)" : " (NOT decreasing)") << "; " << std::setprecision(1) << secs
     << " s";
  return {pfa_ok && ratio_ok && enough_runs && monotone && secs < kSweepSeconds, os.str()};
}

Verdict criterion6() {
  const auto pair = DistributionPair::from_snr_db(3.0);
  constexpr std::int64_t len = 100000, reps = 5;
  double early = 0.0, late = 0.0;
  int max_updates = 0;
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    const auto run = sim::generate_run(pair, sim::InitialState::Random, 50000, len,
                                       derive_seed(6, streams::kValidation,
                                                   static_cast<std::uint64_t>(rep)));
    // Densities are evaluated up front so only the recursion is timed.
    std::vector<double> lf0(len), lf1(len);
    for (std::int64_t i = 0; i < len; ++i) {
      lf0[i] = pair.log_density(Which::f0, run.samples[i]);
      lf1[i] = pair.log_density(Which::f1, run.samples[i]);
    }
    Detector det(pair, kRef);
    const auto t0 = Clock::now();
    for (std::int64_t i = 0; i < 1000; ++i) det.step_log_densities(lf0[i], lf1[i]);
    early += seconds_since(t0);
    for (std::int64_t i = 1000; i < 10000; ++i) det.step_log_densities(lf0[i], lf1[i]);
    const auto t1 = Clock::now();
    for (std::int64_t i = 10000; i < len; ++i) {
      det.step_log_densities(lf0[i], lf1[i]);
      max_updates = std::max(max_updates, det.last_step_updates());
    }
    late += seconds_since(t1);
  }
  const double early_ns = 1e9 * early / (reps * 1000.0);
  const double late_ns = 1e9 * late / (reps * (len - 10000.0));
  const double ratio = late_ns / early_ns;
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << "mean step " << early_ns << " ns over samples 1..1e3, "
     << late_ns << " ns over 1e4..1e5, ratio " << std::setprecision(3) << ratio << " (limit "
     << kStepTimeRatioLimit << "); max accumulator updates per step " << max_updates << " <= "
     << Detector::kMaxUpdatesPerStep;
  return {ratio <= kStepTimeRatioLimit && max_updates <= Detector::kMaxUpdatesPerStep, os.str()};
}

Verdict criterion7() {
  const auto pair = DistributionPair::from_snr_db(3.0);
  constexpr std::int64_t m = 500, cal_runs = 20000, fresh_runs = 20000;
  sim::MonteCarloConfig mc;
  mc.pair = pair;
  mc.params = analysis::suggest_params(analysis::distance_ratios(pair), 1e4);
  mc.m = m;
  mc.n_max = m;
  mc.runs = cal_runs;
  mc.master_seed = 70;
  const auto cb = sim::calibrate_b(mc, kPfaTarget, 1e-2, 1e12);
  mc.params.b = cb.b;
  const auto fresh =
      sim::make_prechange_paths(pair, sim::InitialState::Random, m, fresh_runs, 71, streams::kValidation);
  const double pfa_b =
      static_cast<double>(sim::count_false_alarms(pair, mc.params, fresh)) / fresh_runs;

  double pfa_h[2];
  double h[2];
  for (auto dir : {CusumDirection::f0_to_f1, CusumDirection::f1_to_f0}) {
    const auto i = static_cast<std::size_t>(dir);
    h[i] = calibrate_threshold(pair, dir, m, kPfaTarget, cal_runs, 72).h;
    const auto maxima = cusum_prechange_maxima(pair, dir, m, fresh_runs, 73);
    pfa_h[i] = static_cast<double>(std::count_if(maxima.begin(), maxima.end(),
                                                 [&](double v) { return v >= h[i]; })) /
               fresh_runs;
  }
  const auto in_band = [](double p) { return std::abs(p - kPfaTarget) <= kPfaBand; };
  std::ostringstream os;
  os << std::setprecision(5) << "3 dB, m=500: b=" << cb.b << " -> fresh PFA " << pfa_b
     << "; h(f0->f1)=" << h[0] << " -> " << pfa_h[0] << "; h(f1->f0)=" << h[1] << " -> "
     << pfa_h[1] << " (band " << kPfaTarget - kPfaBand << ".." << kPfaTarget + kPfaBand << ", "
     << fresh_runs << " fresh runs each)";
  return {in_band(pfa_b) && in_band(pfa_h[0]) && in_band(pfa_h[1]), os.str()};
}

// Cost rows written out directly for the newest change time (k = n) and
// for no change (k = 1).
double newest_row(std::int64_t n, Side ts, std::int64_t j, const CostParams& p) {
  if (ts == Side::A) return j == 1 ? p.b : (j < n ? std::pow(p.a, double(n - j)) : 0.0);
  return j == 1 ? std::pow(p.c, double(n - 1)) : std::pow(p.a, double(j - 1)) * p.c;
}

Verdict criterion8() {
  std::vector<std::string> failures;
  const CostParams p{1.45, 1e4, 1.3};

  // cost table consistency
  std::int64_t cells = 0;
  bool table_ok = true;
  for (std::int64_t n = 2; n <= 20; ++n)
    for (Side ts : {Side::A, Side::B})
      for (std::int64_t j = 1; j <= n; ++j) {
        const double want = newest_row(n, ts, j, p);
        const double got = cost({Side::A, n}, {ts, j}, n, p);
        const double got_b = cost({Side::B, n}, {opposite(ts), j}, n, p);
        table_ok = table_ok && std::abs(got - want) <= 1e-12 * std::max(1.0, want) &&
                   std::abs(got_b - want) <= 1e-12 * std::max(1.0, want);
        cells += 2;
      }
  if (!table_ok) failures.push_back("cost table");

  // scale invariance of the winner
  const auto base = DistributionPair::from_snr_db(3.0);
  bool scale_ok = true;
  for (double scale : {1e-3, 0.37, 5.0, 1e4}) {
    const auto scaled = DistributionPair::custom(
        [&base, scale](double x) { return scale * base.density(Which::f0, x); },
        [&base, scale](double x) { return scale * base.density(Which::f1, x); });
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto run = sim::generate_run(base, sim::InitialState::Random, 60, 300,
                                         derive_seed(8, streams::kValidation, s));
      Detector d1(base, kRef), d2(scaled, kRef);
      for (double x : run.samples) scale_ok = scale_ok && d1.step(x).decision.winner == d2.step(x).decision.winner;
    }
  }
  if (!scale_ok) failures.push_back("scale invariance");

  // side symmetry under exchanging f0 and f1
  bool sym_ok = true;
  const auto mirrored = base.swapped();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto run = sim::generate_run(base, sim::InitialState::Random, 60, 300,
                                       derive_seed(9, streams::kValidation, s));
    Detector d1(base, kRef), d2(mirrored, kRef);
    for (double x : run.samples) {
      const auto a = d1.step(x).decision;
      const auto b = d2.step(x).decision;
      sym_ok = sym_ok && a.winner.side == opposite(b.winner.side) &&
               a.winner.change_index == b.winner.change_index &&
               rel_log_err(a.risks[0], b.risks[1]) < 1e-12 &&
               rel_log_err(a.risks[2], b.risks[3]) < 1e-12;
    }
  }
  if (!sym_ok) failures.push_back("side symmetry");

  // determinism under fixed seeds
  sim::MonteCarloConfig mc;
  mc.pair = base;
  mc.params = kRef;
  mc.m = 100;
  mc.n_max = 300;
  mc.runs = 500;
  mc.master_seed = 10;
  const auto o1 = sim::monte_carlo_outcomes(mc);
  const auto o2 = sim::monte_carlo_outcomes(mc);
  bool det_ok = true;
  for (std::size_t i = 0; i < o1.size(); ++i)
    det_ok = det_ok && o1[i].detection_time == o2[i].detection_time &&
             o1[i].declared_side == o2[i].declared_side &&
             o1[i].classification == o2[i].classification;
  const auto m1 = sim::monte_carlo(mc), m2 = sim::monte_carlo(mc);
  det_ok = det_ok && m1.mean_delay.value == m2.mean_delay.value && m1.pfa.value == m2.pfa.value;
  if (!det_ok) failures.push_back("determinism");

  std::ostringstream os;
  os << "cost table (" << cells << " cells, n<=20) " << (table_ok ? "ok" : "FAIL")
     << "; scale invariance " << (scale_ok ? "ok" : "FAIL") << "; side symmetry "
     << (sym_ok ? "ok" : "FAIL") << "; determinism " << (det_ok ? "ok" : "FAIL");
  return {failures.empty(), os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Verdict()>> all{criterion1, criterion2, criterion3, criterion4,
                                                  criterion5, criterion6, criterion7, criterion8};
  bool ok = true;
  for (int i = 1; i <= 8; ++i) {
    if (only != 0 && only != i) continue;
    Verdict v;
    try {
      v = all[static_cast<std::size_t>(i - 1)]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << i << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail
              << std::endl;
    ok = ok && v.pass;
  }
  return ok ? 0 : 1;
}

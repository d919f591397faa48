#pragma once

// Command-line front end: trace, simulate, calibrate, sweep, check-params,
// gnuplot. Every subcommand writes config_echo.json (the fully resolved
// configuration) into the output directory.
//
// Exit codes: 0 success, 1 usage error, 2 bad configuration, 3 numerical
// failure (including calibration that cannot reach its target).

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tscd/analysis.hpp"
#include "tscd/config.hpp"
#include "tscd/core.hpp"
#include "tscd/cusum.hpp"
#include "tscd/io.hpp"
#include "tscd/seeding.hpp"
#include "tscd/sim.hpp"

namespace tscd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct Options {
  std::string subcommand;
  std::optional<std::string> config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string trace_csv = "trace.csv";  // gnuplot only
};

namespace detail {

inline std::ofstream open_out(const Options& o, const std::string& name) {
  std::ofstream f(std::filesystem::path(o.out_dir) / name);
  if (!f) throw config::ConfigError("--out", "cannot write " + name + " in " + o.out_dir);
  return f;
}

/// a, c from the config or the suggested rule; b fixed, or calibrated when
/// `calibrate_b` is set and b is "auto" (1e4 otherwise).
struct ResolvedPoint {
  DistributionPair pair = DistributionPair::gaussian_mean_shift(1.0, 1.0);
  CostParams params;
  analysis::DistanceRatios ratios;
  std::optional<sim::BCalibration> b_calibration;
};

inline sim::SweepConfig sweep_config(const config::RunConfig& cfg) {
  sim::SweepConfig sc;
  sc.snr_db = cfg.snr_db;
  sc.target_pfa = cfg.target_pfa;
  sc.m = cfg.m;
  sc.n_max = cfg.n_max;
  sc.runs = cfg.runs;
  sc.calibration_runs = std::max<std::int64_t>(cfg.runs, 1000);
  sc.master_seed = cfg.master_seed;
  sc.a = cfg.a;
  sc.c = cfg.c;
  sc.b = cfg.b;
  return sc;
}

inline ResolvedPoint resolve_point(const config::RunConfig& cfg, std::size_t idx,
                                   bool calibrate_b) {
  ResolvedPoint rp;
  rp.pair = DistributionPair::from_snr_db(cfg.snr_db[idx]);
  rp.ratios = analysis::distance_ratios(rp.pair);
  const auto sc = sweep_config(cfg);
  rp.params = sim::resolve_params(sc, rp.pair);
  if (!cfg.b && calibrate_b) {
    sim::MonteCarloConfig mc;
    mc.pair = rp.pair;
    mc.params = rp.params;
    mc.m = cfg.m;
    mc.n_max = cfg.n_max;
    mc.runs = sc.calibration_runs;
    mc.master_seed = sim::point_seed(cfg.master_seed, idx);
    rp.b_calibration = sim::calibrate_b(mc, cfg.target_pfa, sc.b_lo, sc.b_hi);
    rp.params.b = rp.b_calibration->b;
  }
  return rp;
}

inline int cmd_trace(const Options& o, const config::RunConfig& cfg, std::ostream& out) {
  const auto rp = resolve_point(cfg, 0, true);
  const auto run = sim::generate_run(rp.pair, sim::InitialState::A, cfg.m, cfg.n_max,
                                     derive_seed(cfg.master_seed, streams::kTrace, 0));
  const auto rows = io::trace(rp.pair, rp.params, run.samples);
  auto f = open_out(o, "trace.csv");
  io::write_trace_csv(f, rows);
  auto g = open_out(o, "trace.gp");
  io::write_gnuplot_script(g, "trace.csv", cfg.m);
  out << "trace: " << rows.size() << " steps, a=" << rp.params.a << " b=" << rp.params.b
      << " c=" << rp.params.c << " -> " << (std::filesystem::path(o.out_dir) / "trace.csv").string()
      << '\n';
  return kExitOk;
}

inline int cmd_simulate(const Options& o, const config::RunConfig& cfg, std::ostream& out) {
  auto f = open_out(o, "metrics.csv");
  io::write_metrics_header(f);
  for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
    const auto rp = resolve_point(cfg, i, true);
    sim::MonteCarloConfig mc;
    mc.pair = rp.pair;
    mc.params = rp.params;
    mc.m = cfg.m;
    mc.n_max = cfg.n_max;
    mc.runs = cfg.runs;
    mc.master_seed = sim::point_seed(cfg.master_seed, i);
    const auto metrics = sim::monte_carlo(mc);
    io::write_metrics_row(f, cfg.snr_db[i], "two_sided", metrics);
    out << "SNR " << cfg.snr_db[i] << " dB: pfa=" << metrics.pfa.value
        << " p_incorrect=" << metrics.p_incorrect.value
        << " mean_delay=" << metrics.mean_delay.value << " (runs " << metrics.runs << ")\n";
  }
  return kExitOk;
}

inline int cmd_calibrate(const Options& o, const config::RunConfig& cfg, std::ostream& out) {
  auto f = open_out(o, "calibration.csv");
  f << "snr_db,quantity,value,pfa,pfa_ci_lo,pfa_ci_hi,runs\n";
  const auto sc = sweep_config(cfg);
  const auto row = [&](double snr, const char* what, double v, const stats::Estimate& e) {
    f << std::setprecision(17) << snr << ',' << what << ',' << v << ',' << e.value << ','
      << e.ci.lo << ',' << e.ci.hi << ',' << e.count << '\n';
    out << "SNR " << snr << " dB: " << what << " = " << v << "  (PFA " << e.value << " ["
        << e.ci.lo << ", " << e.ci.hi << "])\n";
  };
  for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
    const auto rp = resolve_point(cfg, i, true);
    if (rp.b_calibration) row(cfg.snr_db[i], "b", rp.b_calibration->b, rp.b_calibration->pfa);
    const auto seed = sim::point_seed(cfg.master_seed, i);
    const auto h0 = calibrate_threshold(rp.pair, CusumDirection::f0_to_f1, cfg.m, cfg.target_pfa,
                                        sc.calibration_runs, seed);
    const auto h1 = calibrate_threshold(rp.pair, CusumDirection::f1_to_f0, cfg.m, cfg.target_pfa,
                                        sc.calibration_runs, seed);
    row(cfg.snr_db[i], "h_f0_to_f1", h0.h, h0.pfa);
    row(cfg.snr_db[i], "h_f1_to_f0", h1.h, h1.pfa);
  }
  return kExitOk;
}

inline int cmd_sweep(const Options& o, const config::RunConfig& cfg, std::ostream& out) {
  const auto rows = sim::snr_sweep(sweep_config(cfg));
  auto f = open_out(o, "sweep.csv");
  io::write_sweep_csv(f, rows);
  auto g = open_out(o, "metrics.csv");
  io::write_metrics_header(g);
  for (const auto& r : rows) {
    io::write_metrics_row(g, r.snr_db, "two_sided", r.two_sided);
    io::write_metrics_row(g, r.snr_db, "cusum", r.cusum);
    out << "SNR " << r.snr_db << " dB: two-sided delay " << r.two_sided.mean_delay.value
        << ", CUSUM delay " << r.cusum.mean_delay.value << ", ratio " << r.ratio << '\n';
  }
  return kExitOk;
}

inline int cmd_check_params(const Options& o, const config::RunConfig& cfg, std::ostream& out) {
  auto f = open_out(o, "check_params.csv");
  f << io::kConditionHeader << '\n';
  for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
    const auto rp = resolve_point(cfg, i, false);
    const auto report = analysis::check_conditions(rp.params, rp.ratios);
    io::write_condition_table(out, cfg.snr_db[i], rp.params, rp.ratios, report);
    io::write_condition_csv_rows(f, cfg.snr_db[i], rp.params, rp.ratios, report);
  }
  return kExitOk;
}

inline int cmd_gnuplot(const Options& o, const config::RunConfig& cfg, std::ostream& out) {
  auto g = open_out(o, "trace.gp");
  io::write_gnuplot_script(g, o.trace_csv, cfg.m);
  out << "wrote " << (std::filesystem::path(o.out_dir) / "trace.gp").string() << '\n';
  return kExitOk;
}

}  // namespace detail

/// Entry point; args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-sided recursive change detection"};
  app.require_subcommand(1);
  Options o;
  const auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON configuration file");
    sub->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    sub->add_option("--set", o.overrides, "override key=value (repeatable)")
        ->take_all()
        ->allow_extra_args(false);
    sub->add_option("--seed", o.seed, "master seed");
  };
  for (const char* name : {"trace", "simulate", "calibrate", "sweep", "check-params", "gnuplot"}) {
    auto* sub = app.add_subcommand(name);
    add_common(sub);
    if (std::string(name) == "gnuplot")
      sub->add_option("--csv", o.trace_csv, "trace CSV the script should plot");
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    const int code = app.exit(e, msg, msg);
    if (e.get_exit_code() == 0) {
      out << msg.str();
      return kExitOk;
    }
    err << msg.str();
    return code == 0 ? kExitOk : kExitUsage;
  }
  o.subcommand = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = config::resolve(o.config_path, o.overrides, o.seed);
    std::filesystem::create_directories(o.out_dir);
    {
      auto echo = detail::open_out(o, "config_echo.json");
      echo << config::to_json(cfg).dump(2) << '\n';
    }
    if (o.subcommand == "trace") return detail::cmd_trace(o, cfg, out);
    if (o.subcommand == "simulate") return detail::cmd_simulate(o, cfg, out);
    if (o.subcommand == "calibrate") return detail::cmd_calibrate(o, cfg, out);
    if (o.subcommand == "sweep") return detail::cmd_sweep(o, cfg, out);
    if (o.subcommand == "check-params") return detail::cmd_check_params(o, cfg, out);
    return detail::cmd_gnuplot(o, cfg, out);
  } catch (const config::ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace tscd::cli

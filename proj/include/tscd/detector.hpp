#pragma once

// Recursive two-sided change detector.
//
// Tracks, with constant work per sample, the four minimum risks
//   R_1 (no change, starts f0), R_1bar (no change, starts f1),
//   min_k R_k (change f0 -> f1), min_k R_kbar (change f1 -> f0).
// Risks are kept in the log domain and are unnormalized: the evidence and the
// equal prior are never divided out. All four share the same scale at a given
// n, so their ordering is exact.
//
// Both sides run the same update. Side A's pre-change density is f0 and its
// post-change density is f1; side B swaps them. Below, "own" weights belong to
// hypotheses of the side being updated and "cross" weights to the other side.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

#include "tscd/core.hpp"
#include "tscd/log_math.hpp"

namespace tscd {

/// Log-domain accumulators for one side.
struct SideAccumulators {
  /// No-change risk R_1, split as:
  ///   [0] sum_{j=2..n} a^{n-j+1} w_j        (own change hyps, delay)
  ///   [1] sum_{j=2..n} c^{j-1} wbar_j       (cross change hyps)
  ///   [2] c^n wbar_1                        (cross no-change)
  std::array<double, 3> no_change{kLogZero, kLogZero, kLogZero};

  /// Risk of the newest change time k = n:
  ///   [0] sum_{j=2..n-1} a^{n-j} w_j        (delay)
  ///   [1] b w_1                             (false alarm)
  ///   [2] c^{n-1} wbar_1
  ///   [3] sum_{j=2..n} a^{j-1} c wbar_j
  std::array<double, 4> newest{kLogZero, kLogZero, kLogZero, kLogZero};

  /// Risk of the tracked change time k':
  ///   [0] sum_{j=2..k'-1} a^{k'-j} w_j
  ///   [1] sum_{j=k'+1..n} b w_j
  ///   [2] b w_1
  ///   [3] c^{k'-1} wbar_1
  ///   [4] sum_{j=2..k'-1} a^{j-1} c^{n-k'+1} wbar_j
  ///   [5] sum_{j=k'..n} a^{k'-1} c^{n-j+1} wbar_j
  std::array<double, 6> tracked{kLogZero, kLogZero, kLogZero, kLogZero, kLogZero, kLogZero};

  /// Tracked minimum-risk change time k' (0 until n = 2).
  std::int64_t k = 0;
  /// Own log weight of the newest change hypothesis j = n.
  double w_last = kLogZero;

  double no_change_risk() const noexcept { return log_sum_exp(no_change); }
  double newest_risk() const noexcept { return log_sum_exp(newest); }
  double tracked_risk() const noexcept { return log_sum_exp(tracked); }

  friend bool operator==(const SideAccumulators&, const SideAccumulators&) = default;
};

struct DetectorState {
  std::int64_t n = 0;
  /// sum log f0(x_i), sum log f1(x_i)
  double log_lik0 = 0.0;
  double log_lik1 = 0.0;
  std::array<SideAccumulators, 2> side{};  // indexed by Side

  const SideAccumulators& of(Side s) const noexcept { return side[static_cast<std::size_t>(s)]; }

  friend bool operator==(const DetectorState&, const DetectorState&) = default;
};

struct StepReport {
  Decision decision;
  /// Whether the tracked change time moved to the newest sample, per side.
  std::array<bool, 2> tracked_switched{false, false};
};

class Detector {
 public:
  /// Accumulator writes per step once n >= 2: per side 3 no-change, 4 newest,
  /// 6 tracked, 1 newest-weight, and on a switch 6 tracked re-seeds; plus the
  /// two path likelihoods.
  static constexpr int kMaxUpdatesPerStep = 2 * (3 + 4 + 6 + 1 + 6) + 2;

  Detector(DistributionPair pair, CostParams params) : pair_(std::move(pair)), params_(params) {
    params_.validate();
    log_a_ = std::log(params_.a);
    log_b_ = std::log(params_.b);
    log_c_ = std::log(params_.c);
  }

  const DistributionPair& pair() const noexcept { return pair_; }
  const CostParams& params() const noexcept { return params_; }
  const DetectorState& state() const noexcept { return state_; }
  std::int64_t n() const noexcept { return state_.n; }

  /// Accumulator writes performed by the most recent step.
  int last_step_updates() const noexcept { return last_updates_; }

  StepReport step(double x) {
    const double lf0 = pair_.log_density(Which::f0, x);
    const double lf1 = pair_.log_density(Which::f1, x);
    return step_log_densities(lf0, lf1);
  }

  /// Step with precomputed log f0(x), log f1(x).
  StepReport step_log_densities(double lf0, double lf1) {
    if (!std::isfinite(lf0) || !std::isfinite(lf1))
      throw NumericalError("detector: non-finite log density");
    StepReport report;
    int updates = 0;
    auto& st = state_;
    if (st.n == 0) {
      for (Side s : {Side::A, Side::B}) {
        auto& acc = st.side[static_cast<std::size_t>(s)];
        const double lpre = s == Side::A ? lf0 : lf1;
        const double lpost = s == Side::A ? lf1 : lf0;
        acc.no_change = {kLogZero, kLogZero, log_c_ + lpost};
        // Values the newest-change block would hold at n = 1, so that the
        // general recursion produces the closed forms at n = 2.
        acc.newest = {kLogZero, log_b_ + lpre, lpost, kLogZero};
        acc.w_last = kLogZero;
        updates += 3 + 4 + 1;
      }
    } else {
      const double nn = static_cast<double>(st.n);
      for (Side s : {Side::A, Side::B}) {
        auto& acc = st.side[static_cast<std::size_t>(s)];
        const bool a_side = s == Side::A;
        const double lpre = a_side ? lf0 : lf1;
        const double lpost = a_side ? lf1 : lf0;
        const double lik_pre = a_side ? st.log_lik0 : st.log_lik1;
        const double lik_post = a_side ? st.log_lik1 : st.log_lik0;
        const double w_new = lik_pre + lpost;     // own change at n+1
        const double wbar_new = lik_post + lpre;  // cross change at n+1

        auto& r1 = acc.no_change;
        r1[0] = log_add(r1[0] + log_a_ + lpost, log_a_ + w_new);
        r1[1] = log_add(r1[1] + lpre, nn * log_c_ + wbar_new);
        r1[2] += log_c_ + lpost;

        auto& rn = acc.newest;
        const double cross_before_new = rn[3] + lpre;
        rn[0] = log_add(rn[0] + log_a_ + lpost, log_a_ + acc.w_last + lpost);
        rn[1] += lpre;
        rn[2] += log_c_ + lpost;
        rn[3] = log_add(rn[3] + lpre, nn * log_a_ + log_c_ + wbar_new);
        updates += 3 + 4;

        auto& rk = acc.tracked;
        bool reseed = acc.k < 2;
        if (!reseed) {
          const double kk = static_cast<double>(acc.k);
          rk[0] += lpost;
          rk[1] = log_add(rk[1] + lpost, log_b_ + w_new);
          rk[2] += lpre;
          rk[3] += lpost;
          rk[4] += log_c_ + lpre;
          rk[5] = log_add(rk[5] + log_c_ + lpre, log_c_ + (kk - 1.0) * log_a_ + wbar_new);
          updates += 6;
          reseed = acc.newest_risk() < acc.tracked_risk();
        }
        if (reseed) {
          // Tracked change time moves to k' = n+1; its six sums are read off
          // the newest-change block.
          acc.k = st.n + 1;
          rk[0] = rn[0];
          rk[1] = kLogZero;
          rk[2] = rn[1];
          rk[3] = rn[2];
          rk[4] = cross_before_new;
          rk[5] = log_c_ + nn * log_a_ + wbar_new;
          report.tracked_switched[static_cast<std::size_t>(s)] = true;
          updates += 6;
        }
        acc.w_last = w_new;
        updates += 1;
      }
    }
    st.log_lik0 += lf0;
    st.log_lik1 += lf1;
    updates += 2;
    ++st.n;

    Decision& d = report.decision;
    const auto& sa = st.of(Side::A);
    const auto& sb = st.of(Side::B);
    d.risks[0] = sa.no_change_risk();
    d.risks[1] = sb.no_change_risk();
    if (st.n >= 2) {
      d.risks[2] = sa.tracked_risk();
      d.risks[3] = sb.tracked_risk();
      d.argmin_change_indices = {sa.k, sb.k};
    }
    d.winner = pick_winner(d.risks, d.argmin_change_indices);
    last_ = d;
    last_updates_ = updates;
    return report;
  }

  /// Decision from the most recent step.
  const Decision& current_decision() const {
    if (state_.n == 0) throw InputError("detector: no samples consumed yet");
    return last_;
  }

 private:
  DistributionPair pair_;
  CostParams params_;
  double log_a_ = 0.0, log_b_ = 0.0, log_c_ = 0.0;
  DetectorState state_{};
  Decision last_{};
  int last_updates_ = 0;
};

}  // namespace tscd

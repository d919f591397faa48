#pragma once

// Brute-force reference: every one of the 2n Bayes risks recomputed from
// scratch at horizon n. O(n) weights, O(n^2) risk terms.
//
// Risks are the posterior risks scaled by the (common) evidence and the
// equal 1/2n prior, i.e. sum_j cost * likelihood. The scale factor is shared
// by every hypothesis at a given n, so argmins are unaffected.

#include <cstdint>
#include <span>
#include <vector>

#include "tscd/core.hpp"
#include "tscd/log_math.hpp"

namespace tscd::oracle {

/// Unnormalized log likelihoods of every hypothesis; index 0 holds j = 1.
struct WeightTable {
  std::int64_t n = 0;
  std::vector<double> w;     // side A: f0 before j, f1 from j on
  std::vector<double> wbar;  // side B: f1 before j, f0 from j on

  double at(Side s, std::int64_t j) const { return (s == Side::A ? w : wbar)[j - 1]; }
};

inline WeightTable weights(const DistributionPair& pair, std::span<const double> samples) {
  if (samples.empty()) throw InputError("weights: empty sample sequence");
  const auto n = static_cast<std::int64_t>(samples.size());
  // prefix[i] = sum over the first i samples
  std::vector<double> pre0(n + 1, 0.0), pre1(n + 1, 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    pre0[i + 1] = pre0[i] + pair.log_density(Which::f0, samples[i]);
    pre1[i + 1] = pre1[i] + pair.log_density(Which::f1, samples[i]);
  }
  WeightTable t;
  t.n = n;
  t.w.resize(n);
  t.wbar.resize(n);
  t.w[0] = pre0[n];
  t.wbar[0] = pre1[n];
  for (std::int64_t j = 2; j <= n; ++j) {
    t.w[j - 1] = pre0[j - 1] + (pre1[n] - pre1[j - 1]);
    t.wbar[j - 1] = pre1[j - 1] + (pre0[n] - pre0[j - 1]);
  }
  return t;
}

/// Log-domain risks of every hypothesis; index 0 holds k = 1.
struct RiskTable {
  std::int64_t n = 0;
  std::vector<double> r;     // choosing (A, k)
  std::vector<double> rbar;  // choosing (B, k)

  double at(Side s, std::int64_t k) const { return (s == Side::A ? r : rbar)[k - 1]; }
};

inline RiskTable exact_risks(const WeightTable& wt, const CostParams& params) {
  params.validate();
  const std::int64_t n = wt.n;
  RiskTable rt;
  rt.n = n;
  rt.r.resize(n);
  rt.rbar.resize(n);
  std::vector<double> terms;
  terms.reserve(2 * n);
  for (Side side : {Side::A, Side::B}) {
    for (std::int64_t k = 1; k <= n; ++k) {
      terms.clear();
      const HypothesisLabel choice{side, k};
      for (Side tside : {Side::A, Side::B}) {
        for (std::int64_t j = 1; j <= n; ++j) {
          const double lc = log_cost(choice, {tside, j}, n, params);
          if (lc == kLogZero) continue;
          terms.push_back(lc + wt.at(tside, j));
        }
      }
      (side == Side::A ? rt.r : rt.rbar)[k - 1] = log_sum_exp(terms);
    }
  }
  return rt;
}

inline RiskTable exact_risks(const DistributionPair& pair, std::span<const double> samples,
                             const CostParams& params) {
  return exact_risks(weights(pair, samples), params);
}

/// Global minimizer over all 2n hypotheses, with the four summary risks.
/// Ties resolve (A,1), (B,1), then (A,k) before (B,k), then smallest k.
inline Decision exact_argmin(const RiskTable& rt) {
  if (rt.n < 1) throw InputError("exact_argmin: empty risk table");
  Decision d;
  d.risks[0] = rt.r[0];
  d.risks[1] = rt.rbar[0];
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& v = s == 0 ? rt.r : rt.rbar;
    for (std::int64_t k = 2; k <= rt.n; ++k) {
      if (d.argmin_change_indices[s] == 0 || v[k - 1] < d.risks[2 + s]) {
        d.risks[2 + s] = v[k - 1];
        d.argmin_change_indices[s] = k;
      }
    }
  }
  d.winner = pick_winner(d.risks, d.argmin_change_indices);
  return d;
}

}  // namespace tscd::oracle

#pragma once

// Shared vocabulary: density pairs, cost parameters, hypothesis labels,
// decisions, and the unified cost table.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "tscd/log_math.hpp"

namespace tscd {

using Rng = std::mt19937_64;

/// Bad caller input (non-finite sample, out-of-range index, invalid parameter).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value or failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Which { f0, f1 };

inline constexpr Which other(Which w) noexcept { return w == Which::f0 ? Which::f1 : Which::f0; }

/// The two known densities f0 and f1.
///
/// The Gaussian variant is N(mean0, sigma^2) vs N(mean1, sigma^2); the
/// mean-shift factory fixes mean0 = 0. The custom variant wraps caller
/// densities and, optionally, samplers used for Monte-Carlo moments and
/// stream generation.
class DistributionPair {
 public:
  using DensityFn = std::function<double(double)>;
  using SamplerFn = std::function<double(Rng&)>;

  enum class Kind { GaussianMeanShift, Custom };

  static DistributionPair gaussian_mean_shift(double mu, double sigma) {
    if (!std::isfinite(mu)) throw InputError("gaussian_mean_shift: mu must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw InputError("gaussian_mean_shift: sigma must be positive and finite");
    DistributionPair p;
    p.kind_ = Kind::GaussianMeanShift;
    p.mean_ = {0.0, mu};
    p.sigma_ = sigma;
    p.log_norm_ = -std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
    return p;
  }

  /// Mean shift mu = sigma * sqrt(10^(snr_db/10)).
  static DistributionPair from_snr_db(double snr_db, double sigma = 1.0) {
    if (!std::isfinite(snr_db)) throw InputError("from_snr_db: snr must be finite");
    return gaussian_mean_shift(sigma * std::sqrt(std::pow(10.0, snr_db / 10.0)), sigma);
  }

  static DistributionPair custom(DensityFn f0, DensityFn f1, SamplerFn sample0 = {},
                                 SamplerFn sample1 = {}) {
    if (!f0 || !f1) throw InputError("custom pair: both densities are required");
    DistributionPair p;
    p.kind_ = Kind::Custom;
    p.density_ = {std::move(f0), std::move(f1)};
    p.sampler_ = {std::move(sample0), std::move(sample1)};
    return p;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_gaussian() const noexcept { return kind_ == Kind::GaussianMeanShift; }

  /// Gaussian only: the two means, sigma, and mu^2/sigma^2.
  double mean(Which w) const noexcept { return mean_[idx(w)]; }
  double sigma() const noexcept { return sigma_; }
  double snr() const noexcept {
    const double d = (mean_[1] - mean_[0]) / sigma_;
    return d * d;
  }

  bool has_sampler(Which w) const noexcept {
    return is_gaussian() || static_cast<bool>(sampler_[idx(w)]);
  }

  double log_density(Which w, double x) const {
    if (!std::isfinite(x)) throw InputError("density: sample must be finite");
    if (is_gaussian()) {
      const double z = (x - mean_[idx(w)]) / sigma_;
      return log_norm_ - 0.5 * z * z;
    }
    return std::log(density_[idx(w)](x));
  }

  double density(Which w, double x) const {
    if (!std::isfinite(x)) throw InputError("density: sample must be finite");
    if (is_gaussian()) return std::exp(log_density(w, x));
    return density_[idx(w)](x);
  }

  double sample(Which w, Rng& rng) const {
    if (is_gaussian()) {
      std::normal_distribution<double> nd(mean_[idx(w)], sigma_);
      return nd(rng);
    }
    if (!sampler_[idx(w)]) throw InputError("custom pair: no sampler for requested density");
    return sampler_[idx(w)](rng);
  }

  /// The same pair with the roles of f0 and f1 interchanged.
  DistributionPair swapped() const {
    DistributionPair p = *this;
    std::swap(p.mean_[0], p.mean_[1]);
    std::swap(p.density_[0], p.density_[1]);
    std::swap(p.sampler_[0], p.sampler_[1]);
    return p;
  }

 private:
  DistributionPair() = default;
  static constexpr std::size_t idx(Which w) noexcept { return w == Which::f0 ? 0 : 1; }

  Kind kind_ = Kind::GaussianMeanShift;
  std::array<double, 2> mean_{0.0, 0.0};
  double sigma_ = 1.0;
  double log_norm_ = 0.0;
  std::array<DensityFn, 2> density_;
  std::array<SamplerFn, 2> sampler_;
};

inline double density(const DistributionPair& pair, Which w, double x) { return pair.density(w, x); }

/// Unit delay cost base a, false-alarm cost b, unit incorrect-detection cost base c.
struct CostParams {
  double a = 1.45;
  double b = 1e4;
  double c = 1.45;

  void validate() const {
    if (!(a > 1.0) || !std::isfinite(a)) throw InputError("cost params: need a > 1");
    if (!(c > 1.0) || !std::isfinite(c)) throw InputError("cost params: need c > 1");
    if (!(b > 0.0) || !std::isfinite(b)) throw InputError("cost params: need 0 < b < inf");
  }
};

/// Side A: the stream starts at f0 (no change, or f0 -> f1).
/// Side B: the stream starts at f1 (no change, or f1 -> f0).
enum class Side : std::uint8_t { A, B };

inline constexpr Side opposite(Side s) noexcept { return s == Side::A ? Side::B : Side::A; }
inline constexpr Which initial_density(Side s) noexcept { return s == Side::A ? Which::f0 : Which::f1; }
inline constexpr char side_char(Side s) noexcept { return s == Side::A ? 'A' : 'B'; }

/// change_index 1 means "no change"; j >= 2 means the switch happens at sample j.
struct HypothesisLabel {
  Side side = Side::A;
  std::int64_t change_index = 1;

  bool is_change() const noexcept { return change_index >= 2; }
  friend bool operator==(const HypothesisLabel&, const HypothesisLabel&) = default;
};

inline std::string to_string(const HypothesisLabel& h) {
  return std::string(1, side_char(h.side)) + ":" + std::to_string(h.change_index);
}

/// Marks a summary risk with no hypotheses behind it (change risks at n = 1).
inline constexpr double kUnavailable = std::numeric_limits<double>::infinity();

/// Minimum-risk hypothesis plus the four tracked log-domain risks, in the
/// order {R_1, R_1bar, min_k R_k, min_k R_kbar}.
struct Decision {
  HypothesisLabel winner;
  std::array<double, 4> risks{kUnavailable, kUnavailable, kUnavailable, kUnavailable};
  /// Change index achieving each side's change minimum (0 when n < 2).
  std::array<std::int64_t, 2> argmin_change_indices{0, 0};
};

/// Picks the winner among the four summary risks. Exact ties resolve in the
/// order (A,1), (B,1), (A,k), (B,k).
inline HypothesisLabel pick_winner(const std::array<double, 4>& risks,
                                   const std::array<std::int64_t, 2>& change_idx) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < risks.size(); ++i)
    if (risks[i] < risks[best]) best = i;
  switch (best) {
    case 0: return {Side::A, 1};
    case 1: return {Side::B, 1};
    case 2: return {Side::A, change_idx[0]};
    default: return {Side::B, change_idx[1]};
  }
}

/// log of the cost of choosing `choice` when `truth` holds at horizon n;
/// kLogZero for zero cost.
inline double log_cost(const HypothesisLabel& choice, const HypothesisLabel& truth, std::int64_t n,
                       const CostParams& p) {
  const std::int64_t k = choice.change_index;
  const std::int64_t j = truth.change_index;
  if (k < 1 || k > n || j < 1 || j > n) throw InputError("cost: change index out of range");
  const double la = std::log(p.a);
  const double lb = std::log(p.b);
  const double lc = std::log(p.c);
  const auto d = [](std::int64_t e) { return static_cast<double>(e); };

  if (choice.side == truth.side) {
    if (k == 1) return j == 1 ? kLogZero : d(n - j + 1) * la;
    if (j == k) return kLogZero;
    if (j >= 2 && j < k) return d(k - j) * la;
    return lb;  // j == 1 or j > k
  }
  if (k == 1) return j == 1 ? d(n) * lc : d(j - 1) * lc;
  if (j == 1) return d(k - 1) * lc;
  if (j < k) return d(j - 1) * la + d(n - k + 1) * lc;
  return d(k - 1) * la + d(n - j + 1) * lc;
}

inline double cost(const HypothesisLabel& choice, const HypothesisLabel& truth, std::int64_t n,
                   const CostParams& p) {
  return std::exp(log_cost(choice, truth, n, p));
}

}  // namespace tscd

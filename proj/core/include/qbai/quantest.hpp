#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qbai/channel.hpp"
#include "qbai/dist.hpp"

namespace qbai::quantest {

inline constexpr double kDefaultLoopConstant = 2.0;

struct MnbsParams {
  double tau = 0.5;
  double delta_relax = 0.1;
  double delta_fail = 0.1;
  double kappa = 1.0;
  double loop_constant = kDefaultLoopConstant;

  /// Requires delta_relax <= min(tau, 1 - tau), up to 1e-12.
  void validate() const;
};

/// t_max = ceil(C * delta_relax^-2 * ln(m / delta_fail)) for m intervals.
std::uint64_t query_budget(const MnbsParams& p, std::size_t intervals);

/// Repetitions per comparison of the naive search:
/// ceil(2 * delta_relax^-2 * ln(2 log2(m) / delta_fail)).
std::uint64_t naive_repetitions(const MnbsParams& p, std::size_t intervals);

/// Posterior over which interval [x_i, x_{i+1}] holds the tau-quantile.
///
/// Weights are stored as v_i times a scale shared by all intervals on the same side of
/// the current query point, so an update costs O(1) and moving the query point costs
/// O(1) per interval crossed.
class PosteriorState {
 public:
  explicit PosteriorState(std::size_t intervals);

  std::size_t size() const { return v_.size(); }

  /// Smallest grid index j in [1, m] such that intervals 0..j-1 hold at least half the mass.
  std::size_t median_point();

  /// Multiplies intervals left of the current point by `left` and the others by `right`.
  void update(double left, double right);

  /// Normalized weights.
  std::vector<double> weights() const;
  /// Largest weight, lowest index on ties.
  std::size_t argmax() const;
  double entropy() const;

 private:
  double weight(std::size_t i) const { return v_[i] * (i < pivot_ ? scale_left_ : scale_right_); }
  void fold();
  void refresh_sums();

  std::vector<double> v_;
  std::size_t pivot_ = 0;  // intervals [0, pivot_) form the left group
  double scale_left_ = 1.0;
  double scale_right_ = 1.0;
  double sum_left_ = 0.0;
  double sum_right_ = 0.0;
  std::size_t moves_ = 0;
};

struct QuantEstTrace {
  std::vector<std::size_t> query_points;  // grid index of each query
  std::vector<bool> bits;
  std::vector<double> entropy;  // posterior entropy after each update
};

/// Noisy binary search with multiplicative weights. Returns an interval index i in [0, m-1]
/// where m = x.size() - 1.
std::size_t quant_est(channel::Channel& ch, std::size_t arm, std::span<const ExtendedReal> x,
                      const MnbsParams& params, QuantEstTrace* trace = nullptr);

/// Binary search resolving each comparison by a repeated-query majority test.
std::size_t quant_est_naive(channel::Channel& ch, std::size_t arm, std::span<const ExtendedReal> x,
                            const MnbsParams& params);

/// [F(x_i), F(x_{i+1})] intersects the open interval (tau - delta, tau + delta).
bool verify_interval(const dist::RewardDistribution& dist, std::span<const ExtendedReal> x,
                     std::size_t i, double tau, double delta_relax);

}  // namespace qbai::quantest

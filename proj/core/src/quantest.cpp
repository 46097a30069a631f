#include "qbai/quantest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qbai::quantest {
namespace {

constexpr double kParamTol = 1e-12;
constexpr std::size_t kRefreshEvery = 256;
constexpr double kMaxScaleExponent = 100.0;

void check_grid(std::span<const ExtendedReal> x) {
  if (x.size() < 2) throw std::invalid_argument("threshold list needs at least two points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i])) throw std::invalid_argument("threshold list contains NaN");
    if (i > 0 && !(x[i] > x[i - 1])) {
      throw std::invalid_argument("threshold list must be strictly increasing");
    }
  }
}

}  // namespace

void MnbsParams::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (!(delta_relax > 0.0) || delta_relax > std::min(tau, 1.0 - tau) + kParamTol) {
    throw std::invalid_argument("delta_relax must lie in (0, min(tau, 1 - tau)]");
  }
  if (!(delta_fail > 0.0 && delta_fail < 1.0)) {
    throw std::invalid_argument("delta_fail must lie in (0, 1)");
  }
  if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0, 1]");
  if (!(loop_constant > 0.0)) throw std::invalid_argument("loop_constant must be positive");
}

std::uint64_t query_budget(const MnbsParams& p, std::size_t intervals) {
  const double m = static_cast<double>(intervals);
  const double t = p.loop_constant / (p.delta_relax * p.delta_relax) * std::log(m / p.delta_fail);
  if (!(t < 0x1.0p63)) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::ceil(t));
}

std::uint64_t naive_repetitions(const MnbsParams& p, std::size_t intervals) {
  const double m = static_cast<double>(intervals);
  const double t = 2.0 / (p.delta_relax * p.delta_relax) *
                   std::log(2.0 * std::max(1.0, std::log2(m)) / p.delta_fail);
  return static_cast<std::uint64_t>(std::ceil(t));
}

PosteriorState::PosteriorState(std::size_t intervals)
    : v_(intervals, 1.0 / static_cast<double>(intervals)) {
  if (intervals == 0) throw std::invalid_argument("posterior needs at least one interval");
  refresh_sums();
}

void PosteriorState::refresh_sums() {
  sum_left_ = 0.0;
  sum_right_ = 0.0;
  for (std::size_t i = 0; i < v_.size(); ++i) (i < pivot_ ? sum_left_ : sum_right_) += v_[i];
  moves_ = 0;
}

void PosteriorState::fold() {
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] = weight(i);
  scale_left_ = 1.0;
  scale_right_ = 1.0;
  refresh_sums();
  const double total = sum_left_ + sum_right_;
  for (auto& v : v_) v /= total;
  sum_left_ /= total;
  sum_right_ /= total;
}

std::size_t PosteriorState::median_point() {
  const std::size_t m = v_.size();
  const double half = 0.5 * (scale_left_ * sum_left_ + scale_right_ * sum_right_);
  while (pivot_ < m && scale_left_ * sum_left_ < half) {
    const double old = v_[pivot_];
    const double moved = old * scale_right_ / scale_left_;
    v_[pivot_] = moved;
    sum_right_ = std::max(0.0, sum_right_ - old);
    sum_left_ += moved;
    ++pivot_;
    ++moves_;
  }
  while (pivot_ > 1 && scale_left_ * (sum_left_ - v_[pivot_ - 1]) >= half) {
    const double old = v_[pivot_ - 1];
    const double moved = old * scale_left_ / scale_right_;
    v_[pivot_ - 1] = moved;
    sum_left_ = std::max(0.0, sum_left_ - old);
    sum_right_ += moved;
    --pivot_;
    ++moves_;
  }
  if (moves_ >= kRefreshEvery) refresh_sums();
  return pivot_;
}

void PosteriorState::update(double left, double right) {
  scale_left_ *= left;
  scale_right_ *= right;
  const double total = scale_left_ * sum_left_ + scale_right_ * sum_right_;
  scale_left_ /= total;
  scale_right_ /= total;
  if (std::abs(std::log10(scale_left_)) > kMaxScaleExponent ||
      std::abs(std::log10(scale_right_)) > kMaxScaleExponent) {
    fold();
  }
}

std::vector<double> PosteriorState::weights() const {
  std::vector<double> w(v_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v_.size(); ++i) total += (w[i] = weight(i));
  for (auto& x : w) x /= total;
  return w;
}

std::size_t PosteriorState::argmax() const {
  std::size_t best = 0;
  double best_w = -1.0;
  for (std::size_t i = 0; i < v_.size(); ++i) {
    const double w = weight(i);
    if (w > best_w) {
      best = i;
      best_w = w;
    }
  }
  return best;
}

double PosteriorState::entropy() const {
  double h = 0.0;
  for (double w : weights()) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

std::size_t quant_est(channel::Channel& ch, std::size_t arm, std::span<const ExtendedReal> x,
                      const MnbsParams& params, QuantEstTrace* trace) {
  check_grid(x);
  params.validate();
  const std::size_t m = x.size() - 1;
  if (m == 1) return 0;
  const std::uint64_t t_max = query_budget(params, m);

  // Tempered likelihood of the bit under "quantile left of x_j" vs "right of x_j".
  const double tau = params.tau;
  const double h = 0.5 * params.kappa * params.delta_relax;
  PosteriorState post(m);
  for (std::uint64_t t = 0; t < t_max; ++t) {
    const std::size_t j = post.median_point();
    if (j == m) {
      // Every interval is left of x_m: the answer cannot move the posterior.
      if (std::isinf(x[m])) ch.query({arm, x[m], 0});
      break;
    }
    const bool bit = ch.query({arm, x[j], 0}).bit;
    if (bit) {
      post.update(tau + h, tau - h);
    } else {
      post.update(1.0 - tau - h, 1.0 - tau + h);
    }
    if (trace) {
      trace->query_points.push_back(j);
      trace->bits.push_back(bit);
      trace->entropy.push_back(post.entropy());
    }
  }
  return post.argmax();
}

std::size_t quant_est_naive(channel::Channel& ch, std::size_t arm, std::span<const ExtendedReal> x,
                            const MnbsParams& params) {
  check_grid(x);
  params.validate();
  const std::size_t m = x.size() - 1;
  if (m == 1) return 0;
  const std::uint64_t reps = naive_repetitions(params, m);
  std::size_t lo = 0;
  std::size_t hi = m - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    std::uint64_t ones = 0;
    for (std::uint64_t r = 0; r < reps; ++r) ones += ch.query({arm, x[mid], 0}).bit ? 1 : 0;
    if (static_cast<double>(ones) >= params.tau * static_cast<double>(reps)) {
      hi = mid - 1;
    } else {
      lo = mid;
    }
  }
  return lo;
}

bool verify_interval(const dist::RewardDistribution& dist, std::span<const ExtendedReal> x,
                     std::size_t i, double tau, double delta_relax) {
  if (i + 1 >= x.size()) throw std::out_of_range("interval index out of range");
  const double lo = dist.cdf(x[i]);
  const double hi = dist.cdf(x[i + 1]);
  return lo < tau + delta_relax && hi > tau - delta_relax;
}

}  // namespace qbai::quantest

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qbai/channel.hpp"
#include "qbai/dist.hpp"
#include "qbai/gaps.hpp"
#include "qbai/grid.hpp"
#include "qbai/quantest.hpp"

namespace qbai::engine {

struct AlgoConfig {
  double lambda = 1.0;
  double eps = 0.1;
  double q = 0.5;
  double delta = 0.1;
  int c = 1;
  int max_rounds = 64;
  double loop_constant = quantest::kDefaultLoopConstant;
  double kappa = 1.0;

  void validate() const;
  Grid grid() const { return Grid::make(lambda, eps, c); }
};

struct ArmRound {
  std::size_t arm = 0;
  std::size_t l = 0;  // interval index from the lower call
  std::size_t u = 0;  // interval index from the upper call
  double lcb = 0.0;
  double ucb = 0.0;
  std::uint64_t pulls = 0;
  double call_budget = 0.0;  // failure probability handed to each of the two calls
};

struct RoundTrace {
  int t = 0;
  double delta_t = 0.0;
  std::vector<std::size_t> active;  // A_t at round start, ascending
  std::vector<ArmRound> arms;       // one entry per active arm, same order
};

struct RunResult {
  std::optional<std::size_t> returned_arm;
  channel::PullLedger ledger;
  std::vector<RoundTrace> rounds;
  bool terminated = false;
  /// Every arm that met the stopping condition; the lowest index is returned.
  std::vector<std::size_t> qualifying_arms;
  /// Final active set.
  std::vector<std::size_t> active;
};

/// Successive elimination over the threshold-query channel.
RunResult run(channel::Channel& ch, const AlgoConfig& cfg);

enum class ViolationKind {
  lcb_above_quantile,        // LCB_t(k) < Q_k(q) fails
  ucb_below_upper_quantile,  // Q+_k(q) <= UCB_t(k) fails
  lcb_too_low,               // Q+_k(q - delta_t) <= LCB_t(k) + eps_tilde fails
  ucb_too_high,              // UCB_t(k) < Q_k(q + delta_t) + eps_tilde fails
  lcb_decreased,
  ucb_increased,
  off_grid,
};

struct Violation {
  int t = 0;
  std::size_t arm = 0;
  ViolationKind kind = ViolationKind::off_grid;
};

struct BoundsReport {
  std::vector<Violation> violations;

  /// Violations of the probabilistic quantile bounds.
  std::size_t bound_violations() const;
  /// Violations of monotonicity or grid membership, which must never occur.
  std::size_t structural_violations() const;
};

BoundsReport check_anytime_bounds(const RunResult& result, const dist::Instance& inst,
                                  const AlgoConfig& cfg);

/// Sum over rounds and calls of the per-call failure probability.
double failure_budget_used(const RunResult& result);

/// sum_k max(D_k, D)^-2 (ln(1/delta) + ln(1/max(D_k, D)) + ln(c lambda K / eps)).
double predicted_pull_bound(std::span<const double> arm_gaps, double instance_gap, double delta,
                            int c, double lambda, double eps);
double predicted_pull_bound(const dist::Instance& inst, const AlgoConfig& cfg);

std::string run_result_json(const RunResult& result, const AlgoConfig& cfg);

}  // namespace qbai::engine

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qbai/dist.hpp"
#include "qbai/engine.hpp"
#include "qbai/quantest.hpp"

namespace qbai::bench {

inline constexpr std::string_view kVersion = "qbai 0.1.0";

using ParamMap = std::map<std::string, std::string, std::less<>>;

/// Parses "key=value,key=value".
ParamMap parse_params(std::string_view text);

/// Builds an instance from a generator name: lower-bound, prop13, appendix-f1, deterministic,
/// perturb. Arm indices in `params` are 1-based. perturb needs `base`.
dist::Instance make_named_instance(std::string_view name, const ParamMap& params,
                                   const dist::Instance* base = nullptr);

/// fraction * (highest q-quantile - second highest q-quantile).
double separation_eps(const dist::Instance& inst, double fraction);

/// Runs body(0..n-1) on up to `jobs` threads. The first exception is rethrown.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body);
unsigned default_jobs();

struct ExperimentSpec {
  dist::Instance instance;
  engine::AlgoConfig config;
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
  unsigned jobs = 1;
};

struct TrialRow {
  std::uint64_t seed = 0;
  std::optional<std::size_t> returned_arm;  // 0-based
  bool correct = false;
  std::uint64_t total_pulls = 0;
  std::uint64_t sentinel_queries = 0;
  std::size_t rounds = 0;
  std::vector<std::uint64_t> pulls_per_arm;
};

struct Aggregates {
  std::size_t trials = 0;
  std::size_t terminated = 0;
  double success_rate = 0.0;
  double success_ci_low = 0.0;  // Wilson 95%
  double success_ci_high = 0.0;
  double median_total_pulls = 0.0;
  double p10_total_pulls = 0.0;
  double p90_total_pulls = 0.0;
  double mean_total_pulls = 0.0;
  double mean_rounds = 0.0;
};

struct StudyReport {
  std::vector<TrialRow> rows;
  Aggregates aggregates;
  double wall_seconds = 0.0;
};

/// Called once per trial, in trial order, after all trials have finished.
using TrialObserver = std::function<void(std::size_t trial, const engine::RunResult&)>;

/// Trial i runs on seed base_seed + i; correctness is judged against the analytic
/// satisfying set.
StudyReport run_study(const ExperimentSpec& spec, const TrialObserver& observe = {});
Aggregates aggregate(const std::vector<TrialRow>& rows);

std::string study_csv(const StudyReport& report);
std::string study_json(const StudyReport& report, const ExperimentSpec& spec);

/// Linear-interpolated sample quantile, p in [0, 1].
double sample_quantile(std::vector<double> values, double p);

struct ScalingPoint {
  double parameter = 0.0;
  double eps = 0.0;
  StudyReport study;
  /// Trials in which the highest-quantile arm was pulled no more than the lowest-quantile arm.
  std::size_t best_pulled_at_most_worst = 0;
};

struct ScalingReport {
  std::string sweep;
  std::vector<ScalingPoint> points;
  /// median(i) / median(i - 1)
  std::vector<double> adjacent_ratios;
};

struct GammaSweep {
  std::vector<double> gammas{0.16, 0.08, 0.04};
  std::size_t arms = 3;
  double q = 0.5;
  double delta = 0.05;
  int c = 2;
  double eps_fraction = 1.0 / 16.0;  // of the quantile separation
  std::size_t trials = 100;
  std::uint64_t base_seed = 1;
  unsigned jobs = 1;
  double loop_constant = quantest::kDefaultLoopConstant;
};

/// Lower-bound instance nu^(1) for each gamma.
ScalingReport gamma_sweep(const GammaSweep& sweep, const TrialObserver& observe = {});

struct RatioSweep {
  std::vector<double> ratios{10.0, 100.0, 1000.0};  // lambda / eps
  double low_reward = 0.3;
  double high_reward = 0.7;
  double lambda = 1.0;
  double q = 0.5;
  double delta = 0.1;
  int c = 1;
  std::size_t trials = 10;
  std::uint64_t base_seed = 1;
  unsigned jobs = 1;
  double loop_constant = quantest::kDefaultLoopConstant;
};

/// Two deterministic arms with a fixed reward gap, sweeping lambda / eps.
ScalingReport ratio_sweep(const RatioSweep& sweep);

std::string scaling_csv(const ScalingReport& report);
std::string scaling_json(const ScalingReport& report);

struct VerifyCase {
  std::string name;
  dist::RewardDistribution dist;
  quantest::MnbsParams params;
  std::vector<ExtendedReal> grid;
};

struct VerifyResult {
  std::string name;
  std::size_t runs = 0;
  std::uint64_t t_max = 0;
  double success_mnbs = 0.0;
  double success_naive = 0.0;
  double mean_queries_mnbs = 0.0;
  std::uint64_t max_queries_mnbs = 0;
  double mean_queries_naive = 0.0;
  std::uint64_t max_queries_naive = 0;
};

/// Step and continuous CDFs at delta_relax 0.05 and 0.1, delta_fail 0.1.
std::vector<VerifyCase> default_verify_matrix(double loop_constant = quantest::kDefaultLoopConstant);

/// Grid (-inf, 0, step, ..., 1, +inf).
std::vector<ExtendedReal> unit_grid(double step);

std::vector<VerifyResult> run_verify(const std::vector<VerifyCase>& cases, std::size_t runs,
                                     std::uint64_t base_seed, unsigned jobs);
std::string verify_csv(const std::vector<VerifyResult>& results);
std::string verify_json(const std::vector<VerifyResult>& results);

}  // namespace qbai::bench

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qbai/dist.hpp"

namespace qbai::gaps {

struct GapConfig {
  double lambda = 1.0;
  double eps = 0.1;
  double q = 0.5;
  /// Discretisation parameter; empty means the limit c -> infinity.
  std::optional<int> c = 1;
  double bisection_tol = 1e-9;

  /// Takes q and lambda from the instance.
  static GapConfig for_instance(const dist::Instance& inst, double eps, std::optional<int> c);
  void validate() const;
  /// lambda / n for finite c, 0 in the limit.
  double eps_tilde() const;
  /// c * eps_tilde for finite c, eps in the limit.
  double c_eps_tilde() const;
};

enum class Variant {
  ours,      ///< the gap as configured (finite or infinite c)
  limit,     ///< c -> infinity regardless of the configured c
  modified,  ///< quantiles clipped to [0, lambda]
};

/// All five definitions, for the brute-force oracle.
enum class Definition { ours, limit, modified, nkss, hr };

/// Arms k with Q_k(q) >= max_a Q_a(q) - eps, ascending.
std::vector<std::size_t> satisfying_arms(const dist::Instance& inst, double q, double eps);

/// Gap of an arm outside the satisfying set.
double gap_nonsatisfying(const dist::Instance& inst, std::size_t k, const GapConfig& cfg,
                         Variant variant = Variant::ours);

struct SubsetGap {
  double value = 0.0;
  std::vector<std::size_t> subset;  // ascending, 0-based
};

/// Delta_k^(S) for a single subset S containing every satisfying arm.
double gap_for_subset(const dist::Instance& inst, std::size_t k, std::span<const std::size_t> subset,
                      const GapConfig& cfg, std::span<const double> nonsat_gaps,
                      Variant variant = Variant::ours);

/// Gap of a satisfying arm: maximum of Delta_k^(S) over supersets S of the satisfying set.
/// `nonsat_gaps` is indexed by arm; entries of satisfying arms are ignored.
/// Throws std::length_error when more than 20 arms are outside the satisfying set.
SubsetGap gap_satisfying(const dist::Instance& inst, std::size_t k, const GapConfig& cfg,
                         std::span<const double> nonsat_gaps, Variant variant = Variant::ours);

struct ArmGaps {
  std::vector<double> gaps;
  std::vector<std::vector<std::size_t>> best_subsets;  // empty for non-satisfying arms
};

/// Every arm's gap: non-satisfying arms first, then satisfying arms.
ArmGaps arm_gaps(const dist::Instance& inst, const GapConfig& cfg, Variant variant = Variant::ours);

double gap_modified(const dist::Instance& inst, std::size_t k, const GapConfig& cfg);

/// Index of the unique arm with the highest q-quantile; throws std::domain_error on ties.
std::size_t unique_best_arm(const dist::Instance& inst, double q);

double gap_nkss(const dist::Instance& inst, std::size_t k, double q, double tol = 1e-9);
double gap_hr(const dist::Instance& inst, std::size_t k, double q, double tol = 1e-9);

/// max over the satisfying set of the configured gap.
double instance_gap(const dist::Instance& inst, const GapConfig& cfg);

enum class GapClass { positive_gap, zero_gap };
GapClass classify_instance(const dist::Instance& inst, const GapConfig& cfg);

/// Smallest c (at least 1) with c * eps_tilde >= theta * eps for every lambda > eps.
int choose_c(double theta);
bool covers_theta(int c, double theta, double lambda, double eps);

/// Scans Delta over {0, step, 2 step, ...} and returns the largest value satisfying the
/// definition's predicate. Shares no search code with the bisection path.
double gap_bruteforce(const dist::Instance& inst, std::size_t k, const GapConfig& cfg,
                      double grid_step, Definition def = Definition::ours);

struct ArmGapRow {
  double ours = 0.0;
  double limit = 0.0;
  double modified = 0.0;
  std::optional<double> nkss;
  std::optional<double> hr;
  bool satisfying = false;
  std::vector<std::size_t> best_subset;
};

struct GapReport {
  GapConfig config;
  std::vector<ArmGapRow> arms;
  std::vector<std::size_t> satisfying;
  double instance_gap = 0.0;
  double eps_tilde = 0.0;
  std::optional<std::int64_t> n;
  GapClass classification = GapClass::zero_gap;
  /// Set when NKSS/HR gaps are undefined (tied best arms).
  std::optional<std::string> reference_gap_error;
};

GapReport gap_report(const dist::Instance& inst, const GapConfig& cfg);
std::string gap_report_json(const GapReport& report);
std::string gap_report_csv(const GapReport& report);

}  // namespace qbai::gaps

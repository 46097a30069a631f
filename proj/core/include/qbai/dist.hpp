#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace qbai {

/// Value on the extended real line. +/-infinity are ordinary values here.
using ExtendedReal = double;

inline constexpr ExtendedReal kPosInf = std::numeric_limits<double>::infinity();
inline constexpr ExtendedReal kNegInf = -std::numeric_limits<double>::infinity();

namespace dist {

/// One breakpoint of a CDF: `left` is F(x-) and `right` is F(x).
struct CdfKnot {
  double x = 0.0;
  double left = 0.0;
  double right = 0.0;

  friend bool operator==(const CdfKnot&, const CdfKnot&) = default;
};

/// CDF that is linear between breakpoints and may jump at them.
/// F is 0 before the first breakpoint and 1 from the last one on.
class PiecewiseCdf {
 public:
  /// Validates monotonicity and total mass; the final right value is snapped to 1.
  static PiecewiseCdf make(std::vector<CdfKnot> knots);

  double cdf(double x) const;
  /// F(x-)
  double cdf_left(double x) const;
  /// inf{x : F(x) >= p}; -inf for p <= 0.
  ExtendedReal lower_quantile(double p) const;
  /// sup{x : F(x) <= p}; +inf for p >= 1.
  ExtendedReal upper_quantile(double p) const;

  double support_min() const { return knots_.front().x; }
  double support_max() const { return knots_.back().x; }
  std::span<const CdfKnot> knots() const { return knots_; }

  friend bool operator==(const PiecewiseCdf&, const PiecewiseCdf&) = default;

 private:
  explicit PiecewiseCdf(std::vector<CdfKnot> knots) : knots_(std::move(knots)) {}

  std::vector<CdfKnot> knots_;
};

/// Total-variation distance between two piecewise CDFs, computed exactly from breakpoints.
double total_variation(const PiecewiseCdf& f, const PiecewiseCdf& g);

using Point = std::pair<double, double>;

struct DiracUniformMixture {
  double w = 0.0;
  friend bool operator==(const DiracUniformMixture&, const DiracUniformMixture&) = default;
};
struct Deterministic {
  double r = 0.0;
  friend bool operator==(const Deterministic&, const Deterministic&) = default;
};
struct Discrete {
  std::vector<Point> support;  // (value, mass)
  friend bool operator==(const Discrete&, const Discrete&) = default;
};
struct Uniform {
  double a = 0.0;
  double b = 1.0;
  friend bool operator==(const Uniform&, const Uniform&) = default;
};
/// Continuous part given as (x, cumulative continuous mass) knots, plus point masses.
struct Piecewise {
  std::vector<Point> knots;
  std::vector<Point> atoms;  // (x, mass)
  friend bool operator==(const Piecewise&, const Piecewise&) = default;
};

using Family = std::variant<DiracUniformMixture, Deterministic, Discrete, Uniform, Piecewise>;

class RewardDistribution {
 public:
  /// w * delta_0 + (1 - w) * Uniform[0, 1], w in [0, 1).
  static RewardDistribution dirac_uniform_mixture(double w);
  static RewardDistribution deterministic(double r);
  static RewardDistribution discrete(std::vector<Point> support);
  static RewardDistribution uniform(double a, double b);
  static RewardDistribution piecewise(std::vector<Point> knots, std::vector<Point> atoms);
  static RewardDistribution from_family(Family family);
  /// Picks the narrowest family that represents `cdf` exactly.
  static RewardDistribution from_cdf(const PiecewiseCdf& cdf);

  const Family& family() const { return family_; }
  std::string_view family_name() const;
  const PiecewiseCdf& shape() const { return shape_; }

  double cdf(double x) const { return shape_.cdf(x); }
  double cdf_left(double x) const { return shape_.cdf_left(x); }
  ExtendedReal lower_quantile(double p) const { return shape_.lower_quantile(p); }
  ExtendedReal upper_quantile(double p) const { return shape_.upper_quantile(p); }

  /// Inverse-transform sample for u in (0, 1).
  double sample_at(double u) const { return shape_.lower_quantile(u); }

  template <class Urbg>
  double sample(Urbg& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    while (u <= 0.0) u = unit(rng);
    return sample_at(u);
  }

  bool supported_on(double lo, double hi) const {
    return shape_.support_min() >= lo && shape_.support_max() <= hi;
  }

  friend bool operator==(const RewardDistribution& a, const RewardDistribution& b) {
    return a.family_ == b.family_;
  }

 private:
  RewardDistribution(Family family, PiecewiseCdf shape)
      : family_(std::move(family)), shape_(std::move(shape)) {}

  Family family_;
  PiecewiseCdf shape_;
};

/// K arms plus the quantile level q and the bound lambda on every arm's q-quantile.
class Instance {
 public:
  Instance(std::vector<RewardDistribution> arms, double q, double lambda);

  std::size_t size() const { return arms_.size(); }
  const RewardDistribution& arm(std::size_t k) const { return arms_.at(k); }
  std::span<const RewardDistribution> arms() const { return arms_; }
  double q() const { return q_; }
  double lambda() const { return lambda_; }

  /// Q_k(q) for every arm.
  std::vector<double> quantiles() const;

  friend bool operator==(const Instance&, const Instance&) = default;

 private:
  std::vector<RewardDistribution> arms_;
  double q_;
  double lambda_;
};

struct SatisfyingSet {
  double eps = 0.0;
  std::vector<std::size_t> members;  // ascending, 0-based

  bool contains(std::size_t k) const;
};

SatisfyingSet satisfying_set(const Instance& inst, double eps);

/// Lower quantile of the dirac/uniform mixture g_w at level p.
double mixture_quantile(double w, double p);

/// nu^(1) when `modified_arm` is empty, otherwise nu^(j) with j = *modified_arm (0-based, j >= 1).
Instance make_lower_bound_instance(std::size_t arms, double gamma,
                                   std::optional<std::size_t> modified_arm, double q = 0.5);

/// Two arms: uniform on [0, 2 m1] and {m2: 1/2, 2 m1: 1/2}; q = 1/2, lambda defaults to 2 m1.
Instance make_prop13_instance(double m1, double m2, double eps,
                              std::optional<double> lambda = std::nullopt);

/// Two identical arms with half their mass at lambda - eps/3 and half at 2 lambda; q = 1/2.
Instance make_appendix_f1_instance(double lambda, double eps);

/// Moves mass below 0 to 0 and mass above lambda to lambda.
Instance clip(const Instance& inst);

/// Lowers arm k's q-quantile to Q_k(q - eta) and raises arm a's to Q_a(q + eta)
/// by relocating eta probability mass in each.
Instance perturb(const Instance& inst, std::size_t k, std::size_t a, double eta);

}  // namespace dist
}  // namespace qbai

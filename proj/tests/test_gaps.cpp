#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "qbai/gaps.hpp"
#include "qbai/grid.hpp"

using namespace qbai;
using dist::RewardDistribution;
using gaps::GapConfig;
using gaps::Variant;

namespace {

GapConfig config(const dist::Instance& inst, double eps, std::optional<int> c) {
  return GapConfig::for_instance(inst, eps, c);
}

double nu1_eps(const dist::Instance& nu) {
  const auto qs = nu.quantiles();
  return 0.5 * (qs[0] - qs[1]);
}

}  // namespace

TEST(Gaps, LowerBoundClosedForm) {
  const auto nu = dist::make_lower_bound_instance(3, 1.0 / 6.0, std::nullopt);
  const auto cfg = config(nu, nu1_eps(nu), std::nullopt);
  for (std::size_t j : {1u, 2u}) {
    EXPECT_NEAR(gaps::gap_nonsatisfying(nu, j, cfg), 1.0 / 18.0, 1e-6);
  }
  const auto nu01 = dist::make_lower_bound_instance(3, 0.1, std::nullopt);
  EXPECT_NEAR(gaps::gap_nonsatisfying(nu01, 1, config(nu01, nu1_eps(nu01), std::nullopt)),
              oracle::nu1_gap(0.5, 0.1), 1e-6);
  EXPECT_NEAR(oracle::nu1_gap(0.5, 0.1), 0.034883, 1e-6);
}

TEST(Gaps, NonsatisfyingRejectsSatisfyingArm) {
  const auto nu = dist::make_lower_bound_instance(3, 1.0 / 6.0, std::nullopt);
  EXPECT_THROW(gaps::gap_nonsatisfying(nu, 0, config(nu, nu1_eps(nu), 1)), std::invalid_argument);
}

TEST(Gaps, SingleArm) {
  for (double q : {0.2, 0.5, 0.8}) {
    const dist::Instance one({RewardDistribution::uniform(0, 1)}, q, 1.0);
    for (auto c : {std::optional<int>{1}, std::optional<int>{}}) {
      const auto g = gaps::arm_gaps(one, config(one, 0.1, c));
      EXPECT_NEAR(g.gaps[0], std::min(q, 1 - q), 1e-9);
    }
    EXPECT_EQ(gaps::classify_instance(one, config(one, 0.1, 1)), gaps::GapClass::positive_gap);
  }
}

TEST(Gaps, UniqueSatisfyingArmDominates) {
  std::mt19937_64 rng(21);
  int seen = 0;
  for (int i = 0; i < 300 && seen < 40; ++i) {
    const auto inst = oracle::random_instance(rng, 0.5, true);
    auto qs = inst.quantiles();
    auto sorted = qs;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double eps = 0.5 * (sorted[0] - sorted[1]);
    if (!(eps > 1e-3)) continue;
    const auto cfg = config(inst, eps, 1);
    const auto sat = gaps::satisfying_arms(inst, 0.5, eps);
    ASSERT_EQ(sat.size(), 1u);
    const auto g = gaps::arm_gaps(inst, cfg);
    double min_other = 1.0;
    for (std::size_t a = 0; a < inst.size(); ++a) {
      if (a != sat[0]) min_other = std::min(min_other, g.gaps[a]);
    }
    EXPECT_GE(g.gaps[sat[0]], min_other - 1e-12);
    EXPECT_NEAR(gaps::gap_for_subset(inst, sat[0], sat, cfg, g.gaps), min_other, 1e-9);
    ++seen;
  }
  EXPECT_GE(seen, 20);
}

TEST(Gaps, TwoArmSeparation) {
  const auto inst = dist::make_prop13_instance(0.5, 0.48, 0.1);
  const auto cfg = config(inst, 0.1, 2);
  const auto g = gaps::arm_gaps(inst, cfg);
  EXPECT_GE(g.gaps[1], std::min(0.5, (0.48 - (0.5 - 0.05)) / (2 * 0.5)) - 1e-6);
  EXPECT_GT(g.gaps[1], 0.0);
  EXPECT_LE(gaps::gap_nkss(inst, 1, 0.5), 1e-9);
  EXPECT_LE(gaps::gap_hr(inst, 1, 0.5), 1e-9);
  EXPECT_EQ(gaps::classify_instance(inst, cfg), gaps::GapClass::positive_gap);
}

TEST(Gaps, ClippingRestoresGap) {
  const auto inst = dist::make_appendix_f1_instance(1.0, 0.3);
  for (int c : {1, 2, 5}) {
    const auto cfg = config(inst, 0.3, c);
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_NEAR(gaps::gap_modified(inst, k, cfg), 0.5, 1e-9);
      EXPECT_LE(gaps::arm_gaps(inst, cfg).gaps[k], 1e-9);
    }
    EXPECT_EQ(gaps::classify_instance(inst, cfg), gaps::GapClass::zero_gap);
  }
}

TEST(Gaps, ModifiedEqualsGapOfClippedInstance) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    const auto base = oracle::random_instance(rng, 0.5, false);
    // Shrink lambda so that clipping bites.
    double top = 0.0;
    for (double q : base.quantiles()) top = std::max(top, q);
    const double lambda = std::max(top, 0.2) + 0.3 * u(rng);
    std::vector<RewardDistribution> arms(base.arms().begin(), base.arms().end());
    const dist::Instance inst(std::move(arms), 0.5, lambda);
    const double eps = 0.05 + 0.1 * u(rng);
    if (!(lambda > eps)) continue;
    const auto cfg = config(inst, eps, 2);
    const auto clipped = dist::clip(inst);
    const auto ours = gaps::arm_gaps(inst, cfg).gaps;
    const auto on_clipped = gaps::arm_gaps(clipped, cfg).gaps;
    for (std::size_t k = 0; k < inst.size(); ++k) {
      const double m = gaps::gap_modified(inst, k, cfg);
      EXPECT_NEAR(m, on_clipped[k], 1e-9);
      EXPECT_LE(ours[k], m + 1e-9);
    }
  }
}

TEST(Gaps, SupportedInstanceModifiedEqualsOurs) {
  const auto nu = dist::make_lower_bound_instance(4, 0.1, std::nullopt);
  const auto cfg = config(nu, nu1_eps(nu), 1);
  const auto g = gaps::arm_gaps(nu, cfg).gaps;
  for (std::size_t k = 0; k < nu.size(); ++k) EXPECT_NEAR(gaps::gap_modified(nu, k, cfg), g[k], 1e-12);
}

TEST(Gaps, OrderingInvariants) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    const double q = 0.3 + 0.4 * u(rng);
    const auto inst = oracle::random_instance(rng, q, false);
    const double eps = 0.02 + 0.2 * u(rng);
    std::vector<double> prev(inst.size(), 0.0);
    for (auto c : {std::optional<int>{1}, std::optional<int>{2}, std::optional<int>{4},
                   std::optional<int>{8}, std::optional<int>{}}) {
      const auto cfg = config(inst, eps, c);
      const auto ours = gaps::arm_gaps(inst, cfg).gaps;
      const auto limit = gaps::arm_gaps(inst, cfg, Variant::limit).gaps;
      for (std::size_t k = 0; k < inst.size(); ++k) {
        EXPECT_GE(ours[k], prev[k] - 1e-9) << "gap must not shrink as c grows";
        EXPECT_LE(ours[k], limit[k] + 1e-9);
        EXPECT_LE(limit[k], std::min(q, 1 - q) + 1e-12);
        EXPECT_GE(ours[k], 0.0);
      }
      prev = ours;
    }
  }
}

TEST(Gaps, SubsetMaxDominance) {
  std::mt19937_64 rng(24);
  for (int i = 0; i < 30; ++i) {
    const auto inst = oracle::random_instance(rng, 0.5, false, 3, 5);
    const auto cfg = config(inst, 0.15, 1);
    const auto g = gaps::arm_gaps(inst, cfg);
    std::vector<std::size_t> all(inst.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    const auto sat = gaps::satisfying_arms(inst, 0.5, 0.15);
    for (std::size_t k : sat) {
      EXPECT_LE(gaps::gap_for_subset(inst, k, all, cfg, g.gaps), g.gaps[k] + 1e-12);
      const auto best = gaps::gap_satisfying(inst, k, cfg, g.gaps);
      EXPECT_NEAR(best.value, g.gaps[k], 1e-12);
      EXPECT_NEAR(gaps::gap_for_subset(inst, k, best.subset, cfg, g.gaps), best.value, 1e-12);
      EXPECT_TRUE(std::includes(best.subset.begin(), best.subset.end(), sat.begin(), sat.end()));
    }
  }
}

TEST(Gaps, PredicateIsDownwardClosed) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const auto inst = oracle::random_instance(rng, 0.5, false);
    const double et = Grid::make(1.0, 0.1, 1).eps_tilde;
    for (std::size_t k = 0; k < inst.size(); ++k) {
      for (int r = 0; r < 1000; ++r) {
        double d1 = 0.5 * u(rng);
        double d2 = 0.5 * u(rng);
        if (d1 > d2) std::swap(d1, d2);
        if (oracle::nonsat_predicate(inst, k, 0.5, d2, et)) {
          ASSERT_TRUE(oracle::nonsat_predicate(inst, k, 0.5, d1, et));
        }
      }
    }
  }
}

TEST(Gaps, AgreesWithBruteForce) {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr double step = 1e-4;
  for (int i = 0; i < 12; ++i) {
    const double q = 0.3 + 0.4 * u(rng);
    const auto inst = oracle::random_instance(rng, q, true);
    const double eps = 0.02 + 0.15 * u(rng);
    const auto cfg = config(inst, eps, 1 + static_cast<int>(3 * u(rng)));
    const auto report = gaps::gap_report(inst, cfg);
    for (std::size_t k = 0; k < inst.size(); ++k) {
      const auto& row = report.arms[k];
      const double tol = step + 2 * cfg.bisection_tol;
      EXPECT_NEAR(gaps::gap_bruteforce(inst, k, cfg, step, gaps::Definition::ours), row.ours, tol);
      EXPECT_NEAR(gaps::gap_bruteforce(inst, k, cfg, step, gaps::Definition::limit), row.limit, tol);
      EXPECT_NEAR(gaps::gap_bruteforce(inst, k, cfg, step, gaps::Definition::modified), row.modified, tol);
      ASSERT_TRUE(row.nkss && row.hr);
      EXPECT_NEAR(gaps::gap_bruteforce(inst, k, cfg, step, gaps::Definition::nkss), *row.nkss, tol);
      EXPECT_NEAR(gaps::gap_bruteforce(inst, k, cfg, step, gaps::Definition::hr), *row.hr, tol);
    }
  }
}

TEST(Gaps, BruteForceEmptyFeasibleSetIsZero) {
  const auto inst = dist::make_appendix_f1_instance(1.0, 0.3);
  const auto cfg = config(inst, 0.3, 1);
  EXPECT_EQ(gaps::gap_bruteforce(inst, 0, cfg, 1e-3), 0.0);
  EXPECT_THROW(gaps::gap_bruteforce(inst, 0, cfg, 0.0), std::invalid_argument);
}

TEST(Gaps, BruteForceReproducesClosedForm) {
  const auto nu = dist::make_lower_bound_instance(3, 1.0 / 6.0, std::nullopt);
  const auto cfg = config(nu, nu1_eps(nu), std::nullopt);
  EXPECT_NEAR(gaps::gap_bruteforce(nu, 1, cfg, 1e-5), 1.0 / 18.0, 1e-5);
}

TEST(ReferenceGaps, NkssAtMostHr) {
  std::mt19937_64 rng(27);
  for (int i = 0; i < 50; ++i) {
    const auto inst = oracle::random_instance(rng, 0.5, true);
    const auto best = gaps::unique_best_arm(inst, 0.5);
    for (std::size_t k = 0; k < inst.size(); ++k) {
      if (k == best) continue;
      EXPECT_LE(gaps::gap_nkss(inst, k, 0.5), gaps::gap_hr(inst, k, 0.5) + 1e-9);
    }
  }
}

TEST(ReferenceGaps, LowerBoundInstancePositive) {
  const auto nu = dist::make_lower_bound_instance(5, 1.0 / 6.0, std::nullopt);
  for (std::size_t k = 0; k < nu.size(); ++k) EXPECT_GT(gaps::gap_nkss(nu, k, 0.5), 0.0);
}

TEST(ReferenceGaps, TiesAreRejected) {
  const auto g = RewardDistribution::uniform(0, 1);
  const dist::Instance twins({g, g}, 0.5, 1.0);
  EXPECT_THROW(gaps::unique_best_arm(twins, 0.5), std::domain_error);
  EXPECT_THROW(gaps::gap_nkss(twins, 0, 0.5), std::domain_error);
  EXPECT_THROW(gaps::gap_hr(twins, 1, 0.5), std::domain_error);
  const auto report = gaps::gap_report(twins, config(twins, 0.1, 1));
  EXPECT_TRUE(report.reference_gap_error.has_value());
  EXPECT_FALSE(report.arms[0].nkss.has_value());
}

TEST(ReferenceGaps, PositiveHrImpliesPositiveGap) {
  std::mt19937_64 rng(28);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 400 && checked < 100; ++i) {
    const double q = 0.3 + 0.4 * u(rng);
    const auto inst = oracle::random_instance(rng, q, true);
    double min_hr = 1.0;
    for (std::size_t k = 0; k < inst.size(); ++k) min_hr = std::min(min_hr, gaps::gap_hr(inst, k, q));
    if (!(min_hr > 0.01)) continue;
    const double eps = 0.01 + 0.2 * u(rng);
    EXPECT_EQ(gaps::classify_instance(inst, config(inst, eps, 1)), gaps::GapClass::positive_gap);
    ++checked;
  }
  EXPECT_GE(checked, 30);
}

TEST(Gaps, EnumerationCap) {
  std::vector<RewardDistribution> arms{RewardDistribution::deterministic(0.9)};
  for (int i = 0; i < 21; ++i) arms.push_back(RewardDistribution::deterministic(0.1));
  const dist::Instance inst(std::move(arms), 0.5, 1.0);
  EXPECT_THROW(gaps::arm_gaps(inst, config(inst, 0.1, 1)), std::length_error);
  std::vector<RewardDistribution> fewer{RewardDistribution::deterministic(0.9)};
  for (int i = 0; i < 20; ++i) fewer.push_back(RewardDistribution::deterministic(0.1));
  const dist::Instance ok(std::move(fewer), 0.5, 1.0);
  EXPECT_NO_THROW(gaps::arm_gaps(ok, config(ok, 0.1, 1)));
}

TEST(Gaps, ConfigValidation) {
  const auto nu = dist::make_lower_bound_instance(3, 0.1, std::nullopt);
  EXPECT_THROW(gaps::arm_gaps(nu, config(nu, 0.0, 1)), std::invalid_argument);
  EXPECT_THROW(gaps::arm_gaps(nu, config(nu, 2.0, 1)), std::invalid_argument);
  EXPECT_THROW(gaps::arm_gaps(nu, config(nu, 0.1, 0)), std::invalid_argument);
}

TEST(GapReport, Serialization) {
  const auto inst = dist::make_prop13_instance(0.5, 0.48, 0.1);
  const auto report = gaps::gap_report(inst, config(inst, 0.1, 2));
  EXPECT_EQ(report.satisfying, (std::vector<std::size_t>{0, 1}));
  EXPECT_GT(report.instance_gap, 0.0);
  ASSERT_TRUE(report.n.has_value());
  EXPECT_EQ(*report.n, 30);
  const auto csv = gaps::gap_report_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "arm,ours,limit,modified,nkss,hr,best_subset");
  EXPECT_NE(csv.find("\n2,"), std::string::npos);
  EXPECT_NE(csv.find("1;2"), std::string::npos);
  const auto js = gaps::gap_report_json(report);
  EXPECT_NE(js.find("\"instance_gap\""), std::string::npos);
  EXPECT_NE(js.find("\"positive_gap\""), std::string::npos);
}

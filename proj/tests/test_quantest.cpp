#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "qbai/bench.hpp"
#include "qbai/channel.hpp"
#include "qbai/quantest.hpp"

using namespace qbai;
using dist::RewardDistribution;
using quantest::MnbsParams;

namespace {

dist::Instance single(RewardDistribution d, double lambda = 1.0) {
  return dist::Instance({std::move(d)}, 0.5, lambda);
}

MnbsParams params(double tau, double delta_relax, double delta_fail = 0.1) {
  MnbsParams p;
  p.tau = tau;
  p.delta_relax = delta_relax;
  p.delta_fail = delta_fail;
  return p;
}

// Straightforward posterior: explicit weights, full resummation at every step.
struct PlainPosterior {
  std::vector<double> w;
  std::size_t j = 0;

  explicit PlainPosterior(std::size_t m) : w(m, 1.0 / static_cast<double>(m)) {}

  std::size_t median_point() {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    double acc = 0.0;
    for (j = 1; j <= w.size(); ++j) {
      acc += w[j - 1];
      if (acc >= 0.5 * total) break;
    }
    return j;
  }

  void update(double left, double right) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= i < j ? left : right;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
  }
};

}  // namespace

TEST(QuantEst, DeterministicArmExample) {
  const auto inst = single(RewardDistribution::deterministic(0.4));
  const auto x = bench::unit_grid(0.1);
  ASSERT_DOUBLE_EQ(x[4], 0.3);
  channel::Channel ch(inst, 1);
  EXPECT_EQ(quantest::quant_est(ch, 0, x, params(0.5, 0.1)), 4u);
  EXPECT_EQ(oracle::deterministic_interval(0.4, x), 4u);
}

TEST(VerifyInterval, Examples) {
  const auto x = bench::unit_grid(0.1);
  const auto det = RewardDistribution::deterministic(0.4);
  EXPECT_TRUE(quantest::verify_interval(det, x, 4, 0.5, 0.1));
  EXPECT_FALSE(quantest::verify_interval(det, x, 5, 0.5, 0.1));
  EXPECT_FALSE(quantest::verify_interval(det, x, 3, 0.5, 0.1));

  // Cdf values that exactly touch tau -/+ delta are rejected: the interval is open.
  const auto low = RewardDistribution::discrete({{0.2, 0.25}, {0.6, 0.75}});
  EXPECT_FALSE(quantest::verify_interval(low, x, 3, 0.5, 0.25));
  EXPECT_TRUE(quantest::verify_interval(low, x, 6, 0.5, 0.25));
  const auto high = RewardDistribution::discrete({{0.2, 0.75}, {0.6, 0.25}});
  EXPECT_FALSE(quantest::verify_interval(high, x, 3, 0.5, 0.25));
  EXPECT_TRUE(quantest::verify_interval(high, x, 2, 0.5, 0.25));

  EXPECT_THROW(quantest::verify_interval(det, x, x.size() - 1, 0.5, 0.1), std::out_of_range);
}

TEST(VerifyInterval, AgreesWithOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto x = bench::unit_grid(0.05);
  for (int i = 0; i < 200; ++i) {
    const auto inst = oracle::random_instance(rng, 0.5, false, 1, 1);
    const double tau = 0.1 + 0.8 * u(rng);
    const double d = std::min(tau, 1 - tau) * u(rng);
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
      EXPECT_EQ(quantest::verify_interval(inst.arm(0), x, k, tau, d),
                oracle::interval_ok(inst.arm(0), x, k, tau, d));
    }
  }
}

TEST(QuantEst, StaysWithinBudget) {
  const auto inst = single(RewardDistribution::dirac_uniform_mixture(1.0 / 3.0));
  const auto x = bench::unit_grid(0.05);
  const auto p = params(0.5, 0.1);
  const auto t_max = quantest::query_budget(p, x.size() - 1);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    channel::Channel ch(inst, seed);
    quantest::quant_est(ch, 0, x, p);
    EXPECT_LE(ch.ledger().total_pulls + ch.ledger().sentinel_queries, t_max);
  }
}

TEST(QuantEst, MixtureSuccessRate) {
  const auto inst = single(RewardDistribution::dirac_uniform_mixture(1.0 / 3.0));
  const auto x = bench::unit_grid(0.05);
  const auto p = params(0.5, 0.1);
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    channel::Channel ch(inst, seed);
    ok += oracle::interval_ok(inst.arm(0), x, quantest::quant_est(ch, 0, x, p), 0.5, 0.1);
  }
  EXPECT_GE(ok, 900);
}

TEST(QuantEst, RandomArmsMeetTheGuarantee) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto x = bench::unit_grid(0.02);
  int ok = 0;
  constexpr int runs = 400;
  for (int i = 0; i < runs; ++i) {
    const auto inst = oracle::random_instance(rng, 0.5, false, 1, 1);
    const double tau = 0.2 + 0.6 * u(rng);
    const auto p = params(tau, 0.1);
    channel::Channel ch(inst, static_cast<std::uint64_t>(i));
    ok += oracle::interval_ok(inst.arm(0), x, quantest::quant_est(ch, 0, x, p), tau, 0.1);
  }
  EXPECT_GE(ok, static_cast<int>(0.9 * runs));
}

TEST(QuantEstNaive, AgreesOnDeterministicArms) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto x = bench::unit_grid(0.05);
  for (int i = 0; i < 40; ++i) {
    const double r = u(rng);
    const double tau = 0.1 + 0.8 * u(rng);
    const auto inst = single(RewardDistribution::deterministic(r));
    const auto p = params(tau, 0.05);
    channel::Channel a(inst, 1), b(inst, 2);
    const auto want = oracle::deterministic_interval(r, x);
    EXPECT_EQ(quantest::quant_est(a, 0, x, p), want) << "r=" << r;
    EXPECT_EQ(quantest::quant_est_naive(b, 0, x, p), want) << "r=" << r;
  }
}

TEST(QuantEstNaive, SuccessRate) {
  const auto inst = single(RewardDistribution::uniform(0.0, 1.0));
  const auto x = bench::unit_grid(0.05);
  const auto p = params(0.25, 0.1);
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    channel::Channel ch(inst, seed);
    ok += oracle::interval_ok(inst.arm(0), x, quantest::quant_est_naive(ch, 0, x, p), 0.25, 0.1);
  }
  EXPECT_GE(ok, 270);
}

TEST(QuantEst, CheaperThanNaiveOnFineGrids) {
  const auto inst = single(RewardDistribution::dirac_uniform_mixture(1.0 / 3.0));
  const auto x = bench::unit_grid(1.0 / 64.0);
  ASSERT_GE(x.size() - 1, 64u);
  const auto p = params(0.5, 0.05);
  double mnbs = 0.0, naive = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    channel::Channel a(inst, seed), b(inst, seed + 1000);
    quantest::quant_est(a, 0, x, p);
    quantest::quant_est_naive(b, 0, x, p);
    mnbs += static_cast<double>(a.ledger().total_pulls + a.ledger().sentinel_queries);
    naive += static_cast<double>(b.ledger().total_pulls + b.ledger().sentinel_queries);
  }
  EXPECT_LE(mnbs, 1.5 * naive);
}

TEST(Posterior, MatchesPlainImplementation) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr std::size_t m = 37;
  quantest::PosteriorState post(m);
  PlainPosterior plain(m);
  for (int t = 0; t < 3000; ++t) {
    const auto j = post.median_point();
    ASSERT_EQ(j, plain.median_point()) << "t=" << t;
    const bool bit = u(rng) < 0.45;
    const double left = bit ? 0.55 : 0.45, right = bit ? 0.45 : 0.55;
    post.update(left, right);
    plain.update(left, right);
    const auto w = post.weights();
    for (std::size_t i = 0; i < m; ++i) {
      ASSERT_NEAR(w[i], plain.w[i], 1e-9 * std::max(1.0, plain.w[i])) << "t=" << t;
    }
  }
}

TEST(Posterior, NormalizedAndNonnegativeUnderExtremeUpdates) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  quantest::PosteriorState post(101);
  for (int t = 0; t < 20000; ++t) {
    post.median_point();
    const bool bit = u(rng) < 0.5;
    post.update(bit ? 0.99 : 0.01, bit ? 0.01 : 0.99);
    const auto w = post.weights();
    double total = 0.0;
    for (double x : w) {
      ASSERT_GE(x, 0.0);
      ASSERT_TRUE(std::isfinite(x));
      total += x;
    }
    ASSERT_NEAR(total, 1.0, 1e-12);
  }
  EXPECT_LT(post.argmax(), 101u);
}

TEST(Posterior, EntropyStartsAtLogM) {
  quantest::PosteriorState post(16);
  EXPECT_NEAR(post.entropy(), std::log(16.0), 1e-12);
  EXPECT_EQ(post.median_point(), 8u);
  EXPECT_THROW(quantest::PosteriorState(0), std::invalid_argument);
}

TEST(QuantEst, TraceIsDeterministic) {
  const auto inst = single(RewardDistribution::uniform(0.1, 0.9));
  const auto x = bench::unit_grid(0.05);
  const auto p = params(0.3, 0.1);
  quantest::QuantEstTrace a, b;
  channel::Channel ca(inst, 77), cb(inst, 77);
  EXPECT_EQ(quantest::quant_est(ca, 0, x, p, &a), quantest::quant_est(cb, 0, x, p, &b));
  EXPECT_EQ(a.query_points, b.query_points);
  EXPECT_EQ(a.bits, b.bits);
  EXPECT_EQ(a.entropy, b.entropy);
  EXPECT_EQ(a.bits.size(), ca.ledger().total_pulls);
  for (auto j : a.query_points) {
    EXPECT_GE(j, 1u);
    EXPECT_LT(j, x.size() - 1);
  }
}

TEST(QuantEst, SentinelQueryAtUpperEnd) {
  // Every reward exceeds the last finite threshold, so the search ends in the top cell.
  const auto inst = single(RewardDistribution::deterministic(2.0), 3.0);
  const auto x = bench::unit_grid(0.1);
  channel::Channel ch(inst, 3);
  EXPECT_EQ(quantest::quant_est(ch, 0, x, params(0.5, 0.1)), x.size() - 2);
  EXPECT_EQ(ch.ledger().sentinel_queries, 1u);
  EXPECT_TRUE(ch.ledger().consistent());
}

TEST(QuantEst, SingleIntervalNeedsNoQueries) {
  const auto inst = single(RewardDistribution::uniform(0, 1));
  const std::vector<ExtendedReal> x{kNegInf, kPosInf};
  channel::Channel ch(inst, 1);
  EXPECT_EQ(quantest::quant_est(ch, 0, x, params(0.5, 0.1)), 0u);
  EXPECT_EQ(quantest::quant_est_naive(ch, 0, x, params(0.5, 0.1)), 0u);
  EXPECT_EQ(ch.ledger().total_pulls + ch.ledger().sentinel_queries, 0u);
}

TEST(MnbsParams, Validation) {
  EXPECT_NO_THROW(params(0.3, 0.3).validate());
  EXPECT_THROW(params(0.3, 0.31).validate(), std::invalid_argument);
  EXPECT_THROW(params(0.0, 0.1).validate(), std::invalid_argument);
  EXPECT_THROW(params(1.0, 0.1).validate(), std::invalid_argument);
  EXPECT_THROW(params(0.5, 0.0).validate(), std::invalid_argument);
  EXPECT_THROW(params(0.5, 0.1, 1.0).validate(), std::invalid_argument);
  auto p = params(0.5, 0.1);
  p.kappa = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);

  const auto inst = single(RewardDistribution::uniform(0, 1));
  channel::Channel ch(inst, 1);
  const std::vector<ExtendedReal> bad{0.0, 0.5, 0.5, 1.0};
  EXPECT_THROW(quantest::quant_est(ch, 0, bad, params(0.5, 0.1)), std::invalid_argument);
  const std::vector<ExtendedReal> tiny{0.0};
  EXPECT_THROW(quantest::quant_est(ch, 0, tiny, params(0.5, 0.1)), std::invalid_argument);
}

TEST(QueryBudget, Formula) {
  const auto p = params(0.5, 0.1);
  // 2 * 100 * ln(100) = 921.03...
  EXPECT_EQ(quantest::query_budget(p, 10), 922u);
  // 2 * 100 * ln(20 log2(10)) = 839.26...
  EXPECT_EQ(quantest::naive_repetitions(p, 10), 840u);
  auto q = p;
  q.loop_constant = 10.0;
  EXPECT_EQ(quantest::query_budget(q, 10), 4606u);
}

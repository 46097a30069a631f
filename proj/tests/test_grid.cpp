#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "qbai/gaps.hpp"
#include "qbai/grid.hpp"

using namespace qbai;

TEST(Grid, Layout) {
  const auto g = Grid::make(1.0, 0.1, 1);
  EXPECT_EQ(g.n, 20);
  EXPECT_DOUBLE_EQ(g.eps_tilde, 0.05);
  ASSERT_EQ(g.points.size(), 23u);
  EXPECT_EQ(g.cells(), 22u);
  EXPECT_EQ(g.points.front(), kNegInf);
  EXPECT_EQ(g.points.back(), kPosInf);
  EXPECT_EQ(g.points[1], 0.0);
  EXPECT_EQ(g.points[g.points.size() - 2], 1.0);
  for (std::size_t i = 1; i + 2 < g.points.size(); ++i) {
    EXPECT_NEAR(g.points[i + 1] - g.points[i], g.eps_tilde, 1e-15);
  }
}

TEST(Grid, SizeFormula) {
  for (int c : {1, 2, 3, 8}) {
    for (double lambda : {1.0, 2.5, 7.0}) {
      for (double eps : {0.3, 0.1, 0.037, 0.001}) {
        if (!(lambda > eps)) continue;
        const auto g = Grid::make(lambda, eps, c);
        const double exact = (c + 1) * lambda / eps;
        EXPECT_GE(static_cast<double>(g.n), exact * (1 - 1e-12));
        EXPECT_LT(static_cast<double>(g.n), exact + 1.0);
        EXPECT_LE(g.eps_tilde, eps / (c + 1) * (1 + 1e-12));
        EXPECT_EQ(g.points.size(), static_cast<std::size_t>(g.n) + 3);
      }
    }
  }
}

TEST(Grid, SnappedCeil) {
  EXPECT_EQ(snapped_ceil(2.0 * 0.9 / 0.1), 18);
  EXPECT_EQ(snapped_ceil(3.0000001), 4);
  EXPECT_EQ(snapped_ceil(4.0), 4);
  EXPECT_EQ(snapped_ceil(0.2), 1);
}

TEST(Grid, RejectsBadParameters) {
  EXPECT_THROW(Grid::make(1.0, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(Grid::make(0.1, 0.2, 1), std::invalid_argument);
  EXPECT_THROW(Grid::make(1.0, 0.1, 0), std::invalid_argument);
  EXPECT_THROW(Grid::make(INFINITY, 0.1, 1), std::invalid_argument);
}

TEST(ChooseC, Examples) {
  EXPECT_EQ(gaps::choose_c(0.5), 2);
  EXPECT_EQ(gaps::choose_c(0.9), 18);
  EXPECT_EQ(gaps::choose_c(1e-9), 1);
  EXPECT_THROW(gaps::choose_c(0.0), std::invalid_argument);
  EXPECT_THROW(gaps::choose_c(1.0), std::invalid_argument);
}

TEST(ChooseC, CoversTheta) {
  for (double theta : {0.01, 0.2, 1.0 / 3.0, 0.5, 0.75, 0.9}) {
    const int c = gaps::choose_c(theta);
    for (double lambda : {1.0, 3.3, 10.0}) {
      for (double eps : {0.5, 0.07, 0.01}) {
        if (!(lambda > eps)) continue;
        EXPECT_TRUE(gaps::covers_theta(c, theta, lambda, eps)) << theta << " " << lambda << " " << eps;
        const double et = Grid::make(lambda, eps, c).eps_tilde;
        EXPECT_GE(c * et, theta * eps * (1 - 1e-12));
      }
    }
  }
}

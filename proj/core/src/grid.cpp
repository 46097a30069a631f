#include "qbai/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace qbai {

std::int64_t snapped_ceil(double x) {
  const double r = std::nearbyint(x);
  if (std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(x))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(x));
}

std::int64_t Grid::intervals(double lambda, double eps, int c) {
  if (!(eps > 0.0 && lambda > eps) || !std::isfinite(lambda)) {
    throw std::invalid_argument("grid needs lambda > eps > 0");
  }
  if (c < 1) throw std::invalid_argument("grid needs c >= 1");
  return snapped_ceil((c + 1.0) * lambda / eps);
}

Grid Grid::make(double lambda, double eps, int c) {
  Grid g;
  g.n = intervals(lambda, eps, c);
  g.eps_tilde = lambda / static_cast<double>(g.n);
  g.points.reserve(static_cast<std::size_t>(g.n) + 3);
  g.points.push_back(kNegInf);
  for (std::int64_t i = 0; i < g.n; ++i) {
    g.points.push_back(static_cast<double>(i) * lambda / static_cast<double>(g.n));
  }
  g.points.push_back(lambda);
  g.points.push_back(kPosInf);
  return g;
}

}  // namespace qbai

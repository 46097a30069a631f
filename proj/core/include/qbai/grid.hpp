#pragma once

#include <cstdint>
#include <vector>

#include "qbai/dist.hpp"

namespace qbai {

/// Sentinel-padded threshold grid (-inf, 0, e, 2e, ..., (n-1)e, lambda, +inf) with e = lambda / n.
struct Grid {
  std::int64_t n = 0;
  double eps_tilde = 0.0;
  std::vector<ExtendedReal> points;  // n + 3 entries

  /// n = ceil((c + 1) lambda / eps).
  static Grid make(double lambda, double eps, int c);
  static std::int64_t intervals(double lambda, double eps, int c);

  /// Number of intervals between consecutive points (n + 2).
  std::size_t cells() const { return points.size() - 1; }
};

/// ceil(x), except that values within 1e-12 (relative) of an integer snap to it.
std::int64_t snapped_ceil(double x);

}  // namespace qbai

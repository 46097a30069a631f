// Grid-scan reference for the gap definitions. Deliberately shares nothing with the
// bisection code in gaps.cpp apart from the instance's quantile functions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "qbai/gaps.hpp"

namespace qbai::gaps {
namespace {

struct Scan {
  const dist::Instance& inst;
  double q;
  double lambda;
  double step;
  bool clip;

  double lower(std::size_t a, double p) const {
    if (p <= 0.0) return kNegInf;
    double v = inst.arm(a).lower_quantile(p >= 1.0 ? 1.0 : p);
    return clip && v > lambda ? lambda : v;
  }
  double upper(std::size_t a, double p) const {
    if (p >= 1.0) return kPosInf;
    double v = inst.arm(a).upper_quantile(p <= 0.0 ? 0.0 : p);
    return clip && v < 0.0 ? 0.0 : v;
  }

  template <class Pred>
  double largest(Pred pred, double hi) const {
    double best = 0.0;
    const auto count = static_cast<std::int64_t>(std::floor(hi / step));
    for (std::int64_t i = 0; i <= count; ++i) {
      const double d = static_cast<double>(i) * step;
      if (d <= hi && pred(d)) best = d;
    }
    if (hi > 0.0 && pred(hi)) best = hi;
    return best;
  }

  /// largest() followed by a second scan at step / 1000 just above the coarse answer.
  template <class Pred>
  double refined(Pred pred, double hi) const {
    const double coarse = largest(pred, hi);
    const double top = coarse + step < hi ? coarse + step : hi;
    const double fine = step / 1000.0;
    double best = coarse;
    for (int i = 1; i <= 1000; ++i) {
      const double d = coarse + i * fine;
      if (d > top) break;
      if (pred(d)) best = d;
    }
    return best;
  }

  double half_range() const { return q < 1.0 - q ? q : 1.0 - q; }

  double nonsat(std::size_t k, double eps_tilde) const {
    return largest(
        [&](double d) {
          double rhs = kNegInf;
          for (std::size_t a = 0; a < inst.size(); ++a) rhs = std::max(rhs, upper(a, q - d));
          return lower(k, q + d) <= rhs - eps_tilde;
        },
        half_range());
  }

  double sat(std::size_t k, const std::vector<bool>& in_s, double cap, double c_eps_tilde) const {
    return largest(
        [&](double d) {
          double rhs = kNegInf;
          for (std::size_t a = 0; a < inst.size(); ++a) {
            if (in_s[a] && a != k) rhs = std::max(rhs, lower(a, q + d));
          }
          return upper(k, q - d) >= rhs - c_eps_tilde;
        },
        cap);
  }

  std::size_t best_arm() const {
    std::size_t best = 0;
    for (std::size_t a = 1; a < inst.size(); ++a) {
      if (lower(a, q) > lower(best, q)) best = a;
    }
    for (std::size_t a = 0; a < inst.size(); ++a) {
      if (a != best && lower(a, q) == lower(best, q)) throw std::domain_error("best arm is not unique");
    }
    return best;
  }

  double nkss(std::size_t k) const {
    const std::size_t star = best_arm();
    if (k == star) {
      if (inst.size() == 1) return half_range();
      std::size_t second = star == 0 ? 1 : 0;
      for (std::size_t a = 0; a < inst.size(); ++a) {
        if (a != star && lower(a, q) > lower(second, q)) second = a;
      }
      k = second;
    }
    return largest([&](double d) { return lower(k, q + d) <= lower(star, q - d); }, half_range());
  }

  double hr(std::size_t k, bool fine = false) const {
    const std::size_t star = best_arm();
    if (k != star) {
      auto pred = [&](double d) {
        double rhs = kNegInf;
        for (std::size_t a = 0; a < inst.size(); ++a) rhs = std::max(rhs, lower(a, q - d));
        return lower(k, q + d) <= rhs;
      };
      return fine ? refined(pred, half_range()) : largest(pred, half_range());
    }
    // The best arm's value depends on the others' gaps, so those are resolved more finely.
    double rhs = kNegInf;
    for (std::size_t a = 0; a < inst.size(); ++a) {
      if (a != star) rhs = std::max(rhs, lower(a, q + hr(a, true)));
    }
    return largest([&](double d) { return lower(star, q - d) >= rhs; }, q);
  }
};

}  // namespace

double gap_bruteforce(const dist::Instance& inst, std::size_t k, const GapConfig& cfg,
                      double grid_step, Definition def) {
  cfg.validate();
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid_step must be positive");
  if (k >= inst.size()) throw std::out_of_range("arm index out of range");
  const Scan scan{inst, cfg.q, cfg.lambda, grid_step, def == Definition::modified};
  if (def == Definition::nkss) return scan.nkss(k);
  if (def == Definition::hr) return scan.hr(k);

  const double et = def == Definition::limit ? 0.0 : cfg.eps_tilde();
  const double cet = def == Definition::limit ? cfg.eps : cfg.c_eps_tilde();

  double best_q = kNegInf;
  for (std::size_t a = 0; a < inst.size(); ++a) best_q = std::max(best_q, scan.lower(a, cfg.q));
  std::vector<bool> satisfying(inst.size());
  std::vector<std::size_t> free;
  for (std::size_t a = 0; a < inst.size(); ++a) {
    satisfying[a] = scan.lower(a, cfg.q) >= best_q - cfg.eps;
    if (!satisfying[a]) free.push_back(a);
  }
  if (!satisfying[k]) return scan.nonsat(k, et);

  std::vector<double> caps(inst.size(), scan.half_range());
  for (std::size_t a : free) caps[a] = scan.nonsat(a, et);
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free.size()); ++mask) {
    std::vector<bool> in_s = satisfying;
    double cap = scan.half_range();
    for (std::size_t i = 0; i < free.size(); ++i) {
      if (mask >> i & 1U) {
        in_s[free[i]] = true;
      } else {
        cap = std::min(cap, caps[free[i]]);
      }
    }
    best = std::max(best, scan.sat(k, in_s, cap, cet));
  }
  return best;
}

}  // namespace qbai::gaps

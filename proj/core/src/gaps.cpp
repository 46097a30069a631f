#include "qbai/gaps.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "qbai/grid.hpp"
#include "qbai/io.hpp"

namespace qbai::gaps {
namespace {

constexpr std::size_t kMaxFreeArms = 20;
constexpr int kBisectionIterations = 80;

// Quantile access with the optional [0, lambda] clipping of the modified gap.
struct Quantiles {
  const dist::Instance& inst;
  double lambda;
  bool clipped;

  double lower(std::size_t a, double p) const {
    const double v = inst.arm(a).lower_quantile(std::clamp(p, 0.0, 1.0));
    return clipped ? std::min(lambda, v) : v;
  }
  double upper(std::size_t a, double p) const {
    const double v = inst.arm(a).upper_quantile(std::clamp(p, 0.0, 1.0));
    return clipped ? std::max(0.0, v) : v;
  }
};

template <class Pred>
double sup_feasible(Pred pred, double hi, double tol) {
  if (!pred(0.0)) return 0.0;
  if (!(hi > 0.0) || pred(hi)) return std::max(hi, 0.0);
  double lo = 0.0;
  for (int i = 0; i < kBisectionIterations && hi - lo >= tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    (pred(mid) ? lo : hi) = mid;
  }
  return lo;
}

double range_cap(double q) { return std::min(q, 1.0 - q); }

struct Offsets {
  double eps_tilde;
  double c_eps_tilde;
};

Offsets offsets(const GapConfig& cfg, Variant v) {
  if (v == Variant::limit) return {0.0, cfg.eps};
  return {cfg.eps_tilde(), cfg.c_eps_tilde()};
}

void check_arm(const dist::Instance& inst, std::size_t k) {
  if (k >= inst.size()) throw std::out_of_range("arm index out of range");
}

}  // namespace

GapConfig GapConfig::for_instance(const dist::Instance& inst, double eps, std::optional<int> c) {
  GapConfig cfg;
  cfg.lambda = inst.lambda();
  cfg.q = inst.q();
  cfg.eps = eps;
  cfg.c = c;
  cfg.validate();
  return cfg;
}

void GapConfig::validate() const {
  if (!(eps > 0.0 && lambda > eps) || !std::isfinite(lambda)) {
    throw std::invalid_argument("gap config needs lambda > eps > 0");
  }
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("gap config needs q in (0, 1)");
  if (c && *c < 1) throw std::invalid_argument("gap config needs c >= 1");
  if (!(bisection_tol > 0.0)) throw std::invalid_argument("bisection_tol must be positive");
}

double GapConfig::eps_tilde() const {
  if (!c) return 0.0;
  return lambda / static_cast<double>(Grid::intervals(lambda, eps, *c));
}

double GapConfig::c_eps_tilde() const {
  if (!c) return eps;
  return *c * eps_tilde();
}

std::vector<std::size_t> satisfying_arms(const dist::Instance& inst, double q, double eps) {
  std::vector<double> qs;
  for (const auto& arm : inst.arms()) qs.push_back(arm.lower_quantile(q));
  const double best = *std::ranges::max_element(qs);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < qs.size(); ++k) {
    if (qs[k] >= best - eps) out.push_back(k);
  }
  return out;
}

double gap_nonsatisfying(const dist::Instance& inst, std::size_t k, const GapConfig& cfg,
                         Variant variant) {
  cfg.validate();
  check_arm(inst, k);
  if (std::ranges::binary_search(satisfying_arms(inst, cfg.q, cfg.eps), k)) {
    throw std::invalid_argument("arm " + std::to_string(k + 1) + " is satisfying");
  }
  const Quantiles Q{inst, cfg.lambda, variant == Variant::modified};
  const double et = offsets(cfg, variant).eps_tilde;
  const double q = cfg.q;
  auto pred = [&](double d) {
    double rhs = kNegInf;
    for (std::size_t a = 0; a < inst.size(); ++a) rhs = std::max(rhs, Q.upper(a, q - d));
    return Q.lower(k, q + d) <= rhs - et;
  };
  return sup_feasible(pred, range_cap(q), cfg.bisection_tol);
}

double gap_for_subset(const dist::Instance& inst, std::size_t k, std::span<const std::size_t> subset,
                      const GapConfig& cfg, std::span<const double> nonsat_gaps, Variant variant) {
  check_arm(inst, k);
  if (nonsat_gaps.size() != inst.size()) throw std::invalid_argument("nonsat_gaps size != K");
  const double q = cfg.q;
  double cap = range_cap(q);
  for (std::size_t a = 0; a < inst.size(); ++a) {
    if (std::ranges::find(subset, a) == subset.end()) cap = std::min(cap, nonsat_gaps[a]);
  }
  const Quantiles Q{inst, cfg.lambda, variant == Variant::modified};
  const double cet = offsets(cfg, variant).c_eps_tilde;
  auto pred = [&](double d) {
    double rhs = kNegInf;
    for (std::size_t a : subset) {
      if (a != k) rhs = std::max(rhs, Q.lower(a, q + d));
    }
    return Q.upper(k, q - d) >= rhs - cet;
  };
  return sup_feasible(pred, cap, cfg.bisection_tol);
}

SubsetGap gap_satisfying(const dist::Instance& inst, std::size_t k, const GapConfig& cfg,
                         std::span<const double> nonsat_gaps, Variant variant) {
  cfg.validate();
  check_arm(inst, k);
  const auto sat = satisfying_arms(inst, cfg.q, cfg.eps);
  if (!std::ranges::binary_search(sat, k)) {
    throw std::invalid_argument("arm " + std::to_string(k + 1) + " is not satisfying");
  }
  std::vector<std::size_t> free;
  for (std::size_t a = 0; a < inst.size(); ++a) {
    if (!std::ranges::binary_search(sat, a)) free.push_back(a);
  }
  if (free.size() > kMaxFreeArms) {
    throw std::length_error("subset enumeration refused: " + std::to_string(free.size()) +
                            " non-satisfying arms (limit 20)");
  }
  SubsetGap best{-1.0, {}};
  std::vector<std::size_t> subset;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free.size()); ++mask) {
    subset = sat;
    for (std::size_t i = 0; i < free.size(); ++i) {
      if (mask >> i & 1U) subset.push_back(free[i]);
    }
    std::ranges::sort(subset);
    const double v = gap_for_subset(inst, k, subset, cfg, nonsat_gaps, variant);
    if (v > best.value) best = {v, subset};
  }
  return best;
}

ArmGaps arm_gaps(const dist::Instance& inst, const GapConfig& cfg, Variant variant) {
  cfg.validate();
  const auto sat = satisfying_arms(inst, cfg.q, cfg.eps);
  ArmGaps out{std::vector<double>(inst.size(), 0.0),
              std::vector<std::vector<std::size_t>>(inst.size())};
  for (std::size_t k = 0; k < inst.size(); ++k) {
    if (!std::ranges::binary_search(sat, k)) out.gaps[k] = gap_nonsatisfying(inst, k, cfg, variant);
  }
  const std::vector<double> nonsat = out.gaps;
  for (std::size_t k : sat) {
    auto g = gap_satisfying(inst, k, cfg, nonsat, variant);
    out.gaps[k] = g.value;
    out.best_subsets[k] = std::move(g.subset);
  }
  return out;
}

double gap_modified(const dist::Instance& inst, std::size_t k, const GapConfig& cfg) {
  check_arm(inst, k);
  return arm_gaps(inst, cfg, Variant::modified).gaps[k];
}

std::size_t unique_best_arm(const dist::Instance& inst, double q) {
  std::size_t best = 0;
  double best_q = kNegInf;
  bool tied = false;
  for (std::size_t k = 0; k < inst.size(); ++k) {
    const double v = inst.arm(k).lower_quantile(q);
    if (v > best_q) {
      best = k;
      best_q = v;
      tied = false;
    } else if (v == best_q) {
      tied = true;
    }
  }
  if (tied) throw std::domain_error("best arm is not unique");
  return best;
}

double gap_nkss(const dist::Instance& inst, std::size_t k, double q, double tol) {
  check_arm(inst, k);
  const std::size_t star = unique_best_arm(inst, q);
  if (k == star) {
    if (inst.size() == 1) return range_cap(q);
    std::size_t runner_up = star == 0 ? 1 : 0;
    for (std::size_t a = 0; a < inst.size(); ++a) {
      if (a != star && inst.arm(a).lower_quantile(q) > inst.arm(runner_up).lower_quantile(q)) {
        runner_up = a;
      }
    }
    return gap_nkss(inst, runner_up, q, tol);
  }
  const Quantiles Q{inst, 0.0, false};
  auto pred = [&](double d) { return Q.lower(k, q + d) <= Q.lower(star, q - d); };
  return sup_feasible(pred, range_cap(q), tol);
}

double gap_hr(const dist::Instance& inst, std::size_t k, double q, double tol) {
  check_arm(inst, k);
  const std::size_t star = unique_best_arm(inst, q);
  const Quantiles Q{inst, 0.0, false};
  if (k != star) {
    auto pred = [&](double d) {
      double rhs = kNegInf;
      for (std::size_t a = 0; a < inst.size(); ++a) rhs = std::max(rhs, Q.lower(a, q - d));
      return Q.lower(k, q + d) <= rhs;
    };
    return sup_feasible(pred, range_cap(q), tol);
  }
  double rhs = kNegInf;
  for (std::size_t a = 0; a < inst.size(); ++a) {
    if (a != star) rhs = std::max(rhs, Q.lower(a, q + gap_hr(inst, a, q, tol)));
  }
  auto pred = [&](double d) { return Q.lower(star, q - d) >= rhs; };
  return sup_feasible(pred, q, tol);
}

double instance_gap(const dist::Instance& inst, const GapConfig& cfg) {
  const auto g = arm_gaps(inst, cfg, Variant::ours);
  double best = 0.0;
  for (std::size_t k : satisfying_arms(inst, cfg.q, cfg.eps)) best = std::max(best, g.gaps[k]);
  return best;
}

GapClass classify_instance(const dist::Instance& inst, const GapConfig& cfg) {
  return instance_gap(inst, cfg) > cfg.bisection_tol ? GapClass::positive_gap : GapClass::zero_gap;
}

int choose_c(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0, 1)");
  return static_cast<int>(std::max<std::int64_t>(1, snapped_ceil(2.0 * theta / (1.0 - theta))));
}

bool covers_theta(int c, double theta, double lambda, double eps) {
  const double et = lambda / static_cast<double>(Grid::intervals(lambda, eps, c));
  return c * et >= theta * eps * (1.0 - 1e-12);
}

GapReport gap_report(const dist::Instance& inst, const GapConfig& cfg) {
  cfg.validate();
  GapReport r;
  r.config = cfg;
  const auto ours = arm_gaps(inst, cfg, Variant::ours);
  const auto limit = arm_gaps(inst, cfg, Variant::limit);
  const auto modified = arm_gaps(inst, cfg, Variant::modified);
  r.satisfying = satisfying_arms(inst, cfg.q, cfg.eps);
  r.arms.resize(inst.size());
  for (std::size_t k = 0; k < inst.size(); ++k) {
    auto& row = r.arms[k];
    row.ours = ours.gaps[k];
    row.limit = limit.gaps[k];
    row.modified = modified.gaps[k];
    row.satisfying = std::ranges::binary_search(r.satisfying, k);
    row.best_subset = ours.best_subsets[k];
  }
  try {
    for (std::size_t k = 0; k < inst.size(); ++k) {
      r.arms[k].nkss = gap_nkss(inst, k, cfg.q, cfg.bisection_tol);
      r.arms[k].hr = gap_hr(inst, k, cfg.q, cfg.bisection_tol);
    }
  } catch (const std::domain_error& e) {
    for (auto& row : r.arms) row.nkss = row.hr = std::nullopt;
    r.reference_gap_error = e.what();
  }
  for (std::size_t k : r.satisfying) r.instance_gap = std::max(r.instance_gap, r.arms[k].ours);
  r.eps_tilde = cfg.eps_tilde();
  if (cfg.c) r.n = Grid::intervals(cfg.lambda, cfg.eps, *cfg.c);
  r.classification =
      r.instance_gap > cfg.bisection_tol ? GapClass::positive_gap : GapClass::zero_gap;
  return r;
}

namespace {

std::vector<std::size_t> one_based(const std::vector<std::size_t>& v) {
  std::vector<std::size_t> out;
  for (auto k : v) out.push_back(k + 1);
  return out;
}

}  // namespace

std::string gap_report_json(const GapReport& r) {
  using nlohmann::json;
  json j;
  j["config"] = {{"lambda", r.config.lambda},
                 {"eps", r.config.eps},
                 {"q", r.config.q},
                 {"c", r.config.c ? json(*r.config.c) : json("infinity")},
                 {"bisection_tol", r.config.bisection_tol}};
  j["arms"] = json::array();
  for (std::size_t k = 0; k < r.arms.size(); ++k) {
    const auto& a = r.arms[k];
    json row{{"arm", k + 1},
             {"ours", a.ours},
             {"limit", a.limit},
             {"modified", a.modified},
             {"nkss", a.nkss ? json(*a.nkss) : json(nullptr)},
             {"hr", a.hr ? json(*a.hr) : json(nullptr)},
             {"satisfying", a.satisfying}};
    if (a.satisfying) row["best_subset"] = one_based(a.best_subset);
    j["arms"].push_back(row);
  }
  j["satisfying_set"] = one_based(r.satisfying);
  j["instance_gap"] = r.instance_gap;
  j["eps_tilde"] = r.eps_tilde;
  j["n"] = r.n ? json(*r.n) : json(nullptr);
  j["classification"] = r.classification == GapClass::positive_gap ? "positive_gap" : "zero_gap";
  if (r.reference_gap_error) j["reference_gap_error"] = *r.reference_gap_error;
  return j.dump(2) + "\n";
}

std::string gap_report_csv(const GapReport& r) {
  std::ostringstream out;
  out << "arm,ours,limit,modified,nkss,hr,best_subset\n";
  for (std::size_t k = 0; k < r.arms.size(); ++k) {
    const auto& a = r.arms[k];
    out << k + 1 << ',' << format_real(a.ours) << ',' << format_real(a.limit) << ','
        << format_real(a.modified) << ',' << (a.nkss ? format_real(*a.nkss) : "") << ','
        << (a.hr ? format_real(*a.hr) : "") << ',';
    for (std::size_t i = 0; i < a.best_subset.size(); ++i) {
      out << (i ? ";" : "") << a.best_subset[i] + 1;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace qbai::gaps

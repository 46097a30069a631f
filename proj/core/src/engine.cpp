#include "qbai/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace qbai::engine {

void AlgoConfig::validate() const {
  if (!(eps > 0.0 && lambda > eps) || !std::isfinite(lambda)) {
    throw std::invalid_argument("config needs lambda > eps > 0");
  }
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("q must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (c < 1) throw std::invalid_argument("c must be at least 1");
  if (max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");
  if (!(loop_constant > 0.0)) throw std::invalid_argument("loop_constant must be positive");
  if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0, 1]");
}

RunResult run(channel::Channel& ch, const AlgoConfig& cfg) {
  cfg.validate();
  const Grid grid = cfg.grid();
  const std::span<const ExtendedReal> x = grid.points;
  const std::size_t K = ch.arms();
  const double margin = (cfg.c + 1) * grid.eps_tilde;

  std::vector<double> lcb(K, 0.0);
  std::vector<double> ucb(K, cfg.lambda);
  std::vector<std::size_t> active(K);
  std::iota(active.begin(), active.end(), std::size_t{0});
  const auto start = ch.snapshot_ledger();

  RunResult res;
  for (int t = 1;; ++t) {
    // Stopping rule, evaluated with the bounds of the last completed round.
    std::vector<std::size_t> qualifying;
    for (std::size_t k : active) {
      double best_other = kNegInf;
      for (std::size_t a : active) {
        if (a != k) best_other = std::max(best_other, ucb[a]);
      }
      if (lcb[k] >= best_other - margin) qualifying.push_back(k);
    }
    if (!qualifying.empty()) {
      res.terminated = true;
      res.returned_arm = qualifying.front();
      res.qualifying_arms = std::move(qualifying);
      break;
    }
    if (active.empty() || t > cfg.max_rounds) break;

    const double delta_t = std::ldexp(std::min(cfg.q, 1.0 - cfg.q), 1 - t);
    const double budget = cfg.delta * delta_t / (2.0 * static_cast<double>(active.size()));
    RoundTrace round{t, delta_t, active, {}};
    for (std::size_t k : active) {
      const auto before = ch.ledger().pulls_per_arm[k];
      quantest::MnbsParams lower{cfg.q - delta_t / 2.0, delta_t / 2.0, budget, cfg.kappa,
                                 cfg.loop_constant};
      quantest::MnbsParams upper = lower;
      upper.tau = cfg.q + delta_t / 2.0;
      const std::size_t l = quantest::quant_est(ch, k, x, lower);
      lcb[k] = std::max(x[l], lcb[k]);
      const std::size_t u = quantest::quant_est(ch, k, x, upper);
      ucb[k] = std::min(x[u + 1], ucb[k]);
      round.arms.push_back(
          {k, l, u, lcb[k], ucb[k], ch.ledger().pulls_per_arm[k] - before, budget});
    }
    double max_lcb = kNegInf;
    for (std::size_t k : active) max_lcb = std::max(max_lcb, lcb[k]);
    std::erase_if(active, [&](std::size_t k) { return !(ucb[k] > max_lcb); });
    res.rounds.push_back(std::move(round));
  }

  res.active = active;
  const auto& now = ch.ledger();
  res.ledger.pulls_per_arm.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    res.ledger.pulls_per_arm[k] = now.pulls_per_arm[k] - start.pulls_per_arm[k];
  }
  res.ledger.total_pulls = now.total_pulls - start.total_pulls;
  res.ledger.uplink_bits = now.uplink_bits - start.uplink_bits;
  res.ledger.sentinel_queries = now.sentinel_queries - start.sentinel_queries;
  return res;
}

std::size_t BoundsReport::bound_violations() const {
  return static_cast<std::size_t>(std::ranges::count_if(violations, [](const Violation& v) {
    return v.kind == ViolationKind::lcb_above_quantile ||
           v.kind == ViolationKind::ucb_below_upper_quantile ||
           v.kind == ViolationKind::lcb_too_low || v.kind == ViolationKind::ucb_too_high;
  }));
}

std::size_t BoundsReport::structural_violations() const {
  return violations.size() - bound_violations();
}

BoundsReport check_anytime_bounds(const RunResult& result, const dist::Instance& inst,
                                  const AlgoConfig& cfg) {
  const Grid grid = cfg.grid();
  const double et = grid.eps_tilde;
  const double tol = 1e-9 * cfg.lambda;
  const std::span<const ExtendedReal> on_grid(grid.points.data() + 1, grid.points.size() - 2);
  std::vector<double> prev_lcb(inst.size(), 0.0);
  std::vector<double> prev_ucb(inst.size(), cfg.lambda);
  BoundsReport report;
  for (const auto& round : result.rounds) {
    const double dt = round.delta_t;
    for (const auto& a : round.arms) {
      const auto& arm = inst.arm(a.arm);
      auto flag = [&](ViolationKind kind) { report.violations.push_back({round.t, a.arm, kind}); };
      if (!(a.lcb < arm.lower_quantile(cfg.q) + tol)) flag(ViolationKind::lcb_above_quantile);
      if (!(arm.upper_quantile(cfg.q) <= a.ucb + tol)) flag(ViolationKind::ucb_below_upper_quantile);
      if (!(arm.upper_quantile(std::max(0.0, cfg.q - dt)) <= a.lcb + et + tol)) {
        flag(ViolationKind::lcb_too_low);
      }
      if (!(a.ucb < arm.lower_quantile(std::min(1.0, cfg.q + dt)) + et + tol)) {
        flag(ViolationKind::ucb_too_high);
      }
      if (a.lcb < prev_lcb[a.arm]) flag(ViolationKind::lcb_decreased);
      if (a.ucb > prev_ucb[a.arm]) flag(ViolationKind::ucb_increased);
      if (!std::ranges::binary_search(on_grid, a.lcb) || !std::ranges::binary_search(on_grid, a.ucb)) {
        flag(ViolationKind::off_grid);
      }
      prev_lcb[a.arm] = a.lcb;
      prev_ucb[a.arm] = a.ucb;
    }
  }
  return report;
}

double failure_budget_used(const RunResult& result) {
  double sum = 0.0;
  for (const auto& round : result.rounds) {
    for (const auto& a : round.arms) sum += 2.0 * a.call_budget;
  }
  return sum;
}

double predicted_pull_bound(std::span<const double> arm_gaps, double instance_gap, double delta,
                            int c, double lambda, double eps) {
  if (!(instance_gap > 0.0)) return kPosInf;
  const double K = static_cast<double>(arm_gaps.size());
  const double shared = std::log(1.0 / delta) + std::log(c * lambda * K / eps);
  double sum = 0.0;
  for (double g : arm_gaps) {
    const double d = std::max(g, instance_gap);
    sum += (shared + std::log(1.0 / d)) / (d * d);
  }
  return sum;
}

double predicted_pull_bound(const dist::Instance& inst, const AlgoConfig& cfg) {
  cfg.validate();
  gaps::GapConfig gc;
  gc.lambda = cfg.lambda;
  gc.eps = cfg.eps;
  gc.q = cfg.q;
  gc.c = cfg.c;
  const auto g = gaps::arm_gaps(inst, gc, gaps::Variant::ours);
  double d = 0.0;
  for (std::size_t k : gaps::satisfying_arms(inst, cfg.q, cfg.eps)) d = std::max(d, g.gaps[k]);
  return predicted_pull_bound(g.gaps, d, cfg.delta, cfg.c, cfg.lambda, cfg.eps);
}

namespace {

nlohmann::json one_based(const std::vector<std::size_t>& v) {
  auto out = nlohmann::json::array();
  for (auto k : v) out.push_back(k + 1);
  return out;
}

}  // namespace

std::string run_result_json(const RunResult& result, const AlgoConfig& cfg) {
  using nlohmann::json;
  json j;
  j["config"] = {{"lambda", cfg.lambda}, {"eps", cfg.eps},
                 {"q", cfg.q},           {"delta", cfg.delta},
                 {"c", cfg.c},           {"max_rounds", cfg.max_rounds},
                 {"loop_constant", cfg.loop_constant}, {"kappa", cfg.kappa}};
  j["returned_arm"] = result.returned_arm ? json(*result.returned_arm + 1) : json(nullptr);
  j["terminated"] = result.terminated;
  j["qualifying_arms"] = one_based(result.qualifying_arms);
  j["final_active"] = one_based(result.active);
  j["ledger"] = {{"pulls_per_arm", result.ledger.pulls_per_arm},
                 {"total_pulls", result.ledger.total_pulls},
                 {"uplink_bits", result.ledger.uplink_bits},
                 {"sentinel_queries", result.ledger.sentinel_queries}};
  j["rounds"] = json::array();
  for (const auto& r : result.rounds) {
    json arms = json::array();
    for (const auto& a : r.arms) {
      arms.push_back({{"arm", a.arm + 1}, {"l", a.l}, {"u", a.u}, {"lcb", a.lcb}, {"ucb", a.ucb},
                      {"pulls", a.pulls}, {"call_budget", a.call_budget}});
    }
    j["rounds"].push_back(
        {{"t", r.t}, {"delta_t", r.delta_t}, {"active", one_based(r.active)}, {"arms", arms}});
  }
  return j.dump(2) + "\n";
}

}  // namespace qbai::engine

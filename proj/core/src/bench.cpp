#include "qbai/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "qbai/channel.hpp"
#include "qbai/gaps.hpp"
#include "qbai/io.hpp"

namespace qbai::bench {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& key, const std::string& text) {
  // Accepts plain decimals and simple fractions such as 1/6.
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    return parse_number(key, text.substr(0, slash)) / parse_number(key, text.substr(slash + 1));
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    fail("parameter " + key + ": not a number: " + text);
  }
  if (used != text.size()) fail("parameter " + key + ": not a number: " + text);
  return v;
}

double number(const ParamMap& p, std::string_view key) {
  const auto it = p.find(key);
  if (it == p.end()) fail("missing parameter " + std::string(key));
  return parse_number(it->first, it->second);
}

double number_or(const ParamMap& p, std::string_view key, double fallback) {
  return p.contains(key) ? number(p, key) : fallback;
}

std::size_t arm_index(const ParamMap& p, std::string_view key) {
  const double v = number(p, key);
  if (!(v >= 1.0) || v != std::floor(v)) fail("parameter " + std::string(key) + " must be an arm index >= 1");
  return static_cast<std::size_t>(v) - 1;
}

void check_known(const ParamMap& p, std::initializer_list<std::string_view> known) {
  for (const auto& [k, v] : p) {
    if (std::find(known.begin(), known.end(), k) == known.end()) fail("unknown parameter " + k);
  }
}

double wall_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json config_json(const engine::AlgoConfig& cfg) {
  return {{"lambda", cfg.lambda}, {"eps", cfg.eps},     {"q", cfg.q},
          {"delta", cfg.delta},   {"c", cfg.c},         {"max_rounds", cfg.max_rounds},
          {"loop_constant", cfg.loop_constant},         {"kappa", cfg.kappa}};
}

json aggregates_json(const Aggregates& a) {
  return {{"trials", a.trials},
          {"terminated", a.terminated},
          {"success_rate", a.success_rate},
          {"success_ci_low", a.success_ci_low},
          {"success_ci_high", a.success_ci_high},
          {"median_total_pulls", a.median_total_pulls},
          {"p10_total_pulls", a.p10_total_pulls},
          {"p90_total_pulls", a.p90_total_pulls},
          {"mean_total_pulls", a.mean_total_pulls},
          {"mean_rounds", a.mean_rounds}};
}

std::pair<double, double> wilson(std::size_t successes, std::size_t n) {
  if (n == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

}  // namespace

ParamMap parse_params(std::string_view text) {
  ParamMap out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) fail("expected key=value, got " + item);
    std::string key = trim(std::string_view(item).substr(0, eq));
    std::string value = trim(std::string_view(item).substr(eq + 1));
    if (key.empty()) fail("empty parameter name in " + item);
    if (!out.emplace(std::move(key), std::move(value)).second) fail("duplicate parameter in " + item);
  }
  return out;
}

dist::Instance make_named_instance(std::string_view name, const ParamMap& p,
                                   const dist::Instance* base) {
  if (name == "lower-bound") {
    check_known(p, {"K", "gamma", "q", "j"});
    const double K = number(p, "K");
    if (!(K >= 2.0) || K != std::floor(K)) fail("K must be an integer >= 2");
    std::optional<std::size_t> j;
    if (p.contains("j")) j = arm_index(p, "j");
    return dist::make_lower_bound_instance(static_cast<std::size_t>(K), number(p, "gamma"), j,
                                           number_or(p, "q", 0.5));
  }
  if (name == "prop13") {
    check_known(p, {"m1", "m2", "eps", "lambda"});
    std::optional<double> lambda;
    if (p.contains("lambda")) lambda = number(p, "lambda");
    return dist::make_prop13_instance(number(p, "m1"), number(p, "m2"), number(p, "eps"), lambda);
  }
  if (name == "appendix-f1") {
    check_known(p, {"lambda", "eps"});
    return dist::make_appendix_f1_instance(number(p, "lambda"), number(p, "eps"));
  }
  if (name == "deterministic") {
    // rewards=0.2;0.8
    check_known(p, {"rewards", "q", "lambda"});
    const auto it = p.find("rewards");
    if (it == p.end()) fail("missing parameter rewards");
    std::vector<dist::RewardDistribution> arms;
    std::stringstream ss(it->second);
    for (std::string item; std::getline(ss, item, ';');) {
      arms.push_back(dist::RewardDistribution::deterministic(parse_number("rewards", trim(item))));
    }
    if (arms.empty()) fail("rewards must list at least one value");
    return dist::Instance(std::move(arms), number_or(p, "q", 0.5), number_or(p, "lambda", 1.0));
  }
  if (name == "perturb") {
    check_known(p, {"k", "a", "eta"});
    if (!base) fail("perturb needs a base instance");
    return dist::perturb(*base, arm_index(p, "k"), arm_index(p, "a"), number(p, "eta"));
  }
  fail("unknown generator " + std::string(name));
}

double separation_eps(const dist::Instance& inst, double fraction) {
  if (inst.size() < 2) fail("separation needs at least two arms");
  if (!(fraction > 0.0)) fail("fraction must be positive");
  auto qs = inst.quantiles();
  std::sort(qs.begin(), qs.end(), std::greater<>());
  const double sep = qs[0] - qs[1];
  if (!(sep > 0.0)) fail("the two highest quantiles coincide");
  return fraction * sep;
}

unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t i; !stop && (i = next.fetch_add(1)) < n;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Aggregates aggregate(const std::vector<TrialRow>& rows) {
  Aggregates a;
  a.trials = rows.size();
  std::size_t ok = 0;
  double rounds = 0.0;
  double pulls = 0.0;
  std::vector<double> totals;
  totals.reserve(rows.size());
  for (const auto& r : rows) {
    ok += r.correct ? 1 : 0;
    a.terminated += r.returned_arm ? 1 : 0;
    rounds += static_cast<double>(r.rounds);
    pulls += static_cast<double>(r.total_pulls);
    totals.push_back(static_cast<double>(r.total_pulls));
  }
  if (rows.empty()) return a;
  const double n = static_cast<double>(rows.size());
  a.success_rate = static_cast<double>(ok) / n;
  std::tie(a.success_ci_low, a.success_ci_high) = wilson(ok, rows.size());
  a.median_total_pulls = sample_quantile(totals, 0.5);
  a.p10_total_pulls = sample_quantile(totals, 0.1);
  a.p90_total_pulls = sample_quantile(totals, 0.9);
  a.mean_total_pulls = pulls / n;
  a.mean_rounds = rounds / n;
  return a;
}

StudyReport run_study(const ExperimentSpec& spec, const TrialObserver& observe) {
  if (spec.trials < 1) fail("trials must be at least 1");
  spec.config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto satisfying = gaps::satisfying_arms(spec.instance, spec.config.q, spec.config.eps);

  std::vector<engine::RunResult> results(spec.trials);
  parallel_for(spec.trials, spec.jobs, [&](std::size_t i) {
    channel::Channel ch(spec.instance, spec.base_seed + i);
    results[i] = engine::run(ch, spec.config);
  });

  StudyReport report;
  report.rows.reserve(spec.trials);
  for (std::size_t i = 0; i < spec.trials; ++i) {
    const auto& r = results[i];
    TrialRow row;
    row.seed = spec.base_seed + i;
    row.returned_arm = r.returned_arm;
    row.correct = r.returned_arm &&
                  std::find(satisfying.begin(), satisfying.end(), *r.returned_arm) != satisfying.end();
    row.total_pulls = r.ledger.total_pulls;
    row.sentinel_queries = r.ledger.sentinel_queries;
    row.rounds = r.rounds.size();
    row.pulls_per_arm = r.ledger.pulls_per_arm;
    report.rows.push_back(std::move(row));
    if (observe) observe(i, r);
  }
  report.aggregates = aggregate(report.rows);
  report.wall_seconds = wall_since(start);
  return report;
}

std::string study_csv(const StudyReport& report) {
  std::ostringstream out;
  const std::size_t K = report.rows.empty() ? 0 : report.rows.front().pulls_per_arm.size();
  out << "seed,returned_arm,correct,total_pulls,sentinel_queries,rounds";
  for (std::size_t k = 1; k <= K; ++k) out << ",pulls_arm_" << k;
  out << '\n';
  for (const auto& r : report.rows) {
    out << r.seed << ',';
    if (r.returned_arm) out << *r.returned_arm + 1;
    out << ',' << (r.correct ? 1 : 0) << ',' << r.total_pulls << ',' << r.sentinel_queries << ','
        << r.rounds;
    for (auto p : r.pulls_per_arm) out << ',' << p;
    out << '\n';
  }
  return out.str();
}

std::string study_json(const StudyReport& report, const ExperimentSpec& spec) {
  json j;
  j["metadata"] = {{"version", std::string(kVersion)},
                   {"wall_seconds", report.wall_seconds},
                   {"trials", spec.trials},
                   {"base_seed", spec.base_seed},
                   {"jobs", spec.jobs}};
  j["config"] = config_json(spec.config);
  j["instance"] = json::parse(dist::instance_to_json(spec.instance));
  j["aggregates"] = aggregates_json(report.aggregates);
  j["rows"] = json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"seed", r.seed},
                         {"returned_arm", r.returned_arm ? json(*r.returned_arm + 1) : json(nullptr)},
                         {"correct", r.correct},
                         {"total_pulls", r.total_pulls},
                         {"sentinel_queries", r.sentinel_queries},
                         {"rounds", r.rounds},
                         {"pulls_per_arm", r.pulls_per_arm}});
  }
  return j.dump(2) + "\n";
}

namespace {

void fill_ratios(ScalingReport& report) {
  for (std::size_t i = 1; i < report.points.size(); ++i) {
    report.adjacent_ratios.push_back(report.points[i].study.aggregates.median_total_pulls /
                                     report.points[i - 1].study.aggregates.median_total_pulls);
  }
}

ScalingPoint run_point(double parameter, const ExperimentSpec& spec, const TrialObserver& observe) {
  const auto qs = spec.instance.quantiles();
  const auto best = static_cast<std::size_t>(std::max_element(qs.begin(), qs.end()) - qs.begin());
  const auto worst = static_cast<std::size_t>(std::min_element(qs.begin(), qs.end()) - qs.begin());
  ScalingPoint point{parameter, spec.config.eps, run_study(spec, observe), 0};
  for (const auto& r : point.study.rows) {
    if (r.pulls_per_arm[best] <= r.pulls_per_arm[worst]) ++point.best_pulled_at_most_worst;
  }
  return point;
}

}  // namespace

ScalingReport gamma_sweep(const GammaSweep& sweep, const TrialObserver& observe) {
  ScalingReport report;
  report.sweep = "gamma";
  for (double gamma : sweep.gammas) {
    auto inst = dist::make_lower_bound_instance(sweep.arms, gamma, std::nullopt, sweep.q);
    engine::AlgoConfig cfg;
    cfg.lambda = inst.lambda();
    cfg.eps = separation_eps(inst, sweep.eps_fraction);
    cfg.q = sweep.q;
    cfg.delta = sweep.delta;
    cfg.c = sweep.c;
    cfg.loop_constant = sweep.loop_constant;
    ExperimentSpec spec{std::move(inst), cfg, sweep.trials, sweep.base_seed, sweep.jobs};
    report.points.push_back(run_point(gamma, spec, observe));
  }
  fill_ratios(report);
  return report;
}

ScalingReport ratio_sweep(const RatioSweep& sweep) {
  ScalingReport report;
  report.sweep = "lambda_over_eps";
  for (double ratio : sweep.ratios) {
    dist::Instance inst({dist::RewardDistribution::deterministic(sweep.low_reward),
                         dist::RewardDistribution::deterministic(sweep.high_reward)},
                        sweep.q, sweep.lambda);
    engine::AlgoConfig cfg;
    cfg.lambda = sweep.lambda;
    cfg.eps = sweep.lambda / ratio;
    cfg.q = sweep.q;
    cfg.delta = sweep.delta;
    cfg.c = sweep.c;
    cfg.loop_constant = sweep.loop_constant;
    ExperimentSpec spec{std::move(inst), cfg, sweep.trials, sweep.base_seed, sweep.jobs};
    report.points.push_back(run_point(ratio, spec, {}));
  }
  fill_ratios(report);
  return report;
}

std::string scaling_csv(const ScalingReport& report) {
  std::ostringstream out;
  out << report.sweep
      << ",eps,trials,success_rate,median_total_pulls,p10_total_pulls,p90_total_pulls,mean_rounds,"
         "best_pulled_at_most_worst,ratio_to_previous\n";
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    const auto& p = report.points[i];
    const auto& a = p.study.aggregates;
    out << format_real(p.parameter) << ',' << format_real(p.eps) << ',' << a.trials << ','
        << format_real(a.success_rate) << ',' << format_real(a.median_total_pulls) << ','
        << format_real(a.p10_total_pulls) << ',' << format_real(a.p90_total_pulls) << ','
        << format_real(a.mean_rounds) << ',' << p.best_pulled_at_most_worst << ',';
    if (i > 0) out << format_real(report.adjacent_ratios[i - 1]);
    out << '\n';
  }
  return out.str();
}

std::string scaling_json(const ScalingReport& report) {
  json j;
  j["sweep"] = report.sweep;
  j["version"] = std::string(kVersion);
  j["adjacent_ratios"] = report.adjacent_ratios;
  j["points"] = json::array();
  for (const auto& p : report.points) {
    j["points"].push_back({{"parameter", p.parameter},
                           {"eps", p.eps},
                           {"wall_seconds", p.study.wall_seconds},
                           {"best_pulled_at_most_worst", p.best_pulled_at_most_worst},
                           {"aggregates", aggregates_json(p.study.aggregates)}});
  }
  return j.dump(2) + "\n";
}

std::vector<ExtendedReal> unit_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) fail("step must lie in (0, 1]");
  const auto n = static_cast<std::int64_t>(std::llround(1.0 / step));
  std::vector<ExtendedReal> x{kNegInf};
  for (std::int64_t i = 0; i < n; ++i) x.push_back(static_cast<double>(i) / static_cast<double>(n));
  x.push_back(1.0);
  x.push_back(kPosInf);
  return x;
}

std::vector<VerifyCase> default_verify_matrix(double loop_constant) {
  using dist::RewardDistribution;
  const auto coarse = unit_grid(0.05);
  const auto fine = unit_grid(0.01);
  const auto g13 = RewardDistribution::dirac_uniform_mixture(1.0 / 3.0);
  const auto unif = RewardDistribution::uniform(0.0, 1.0);
  const auto disc = RewardDistribution::discrete({{0.2, 0.3}, {0.5, 0.4}, {0.9, 0.3}});
  auto params = [&](double tau, double d) {
    return quantest::MnbsParams{tau, d, 0.1, 1.0, loop_constant};
  };
  return {
      {"mixture_1/3 tau=0.5 D=0.1", g13, params(0.5, 0.1), coarse},
      {"mixture_1/3 tau=0.5 D=0.05", g13, params(0.5, 0.05), fine},
      {"uniform tau=0.25 D=0.1", unif, params(0.25, 0.1), coarse},
      {"uniform tau=0.8 D=0.05", unif, params(0.8, 0.05), fine},
      {"deterministic_0.4 tau=0.5 D=0.1", RewardDistribution::deterministic(0.4), params(0.5, 0.1), coarse},
      {"deterministic_0.37 tau=0.9 D=0.05", RewardDistribution::deterministic(0.37), params(0.9, 0.05), fine},
      {"discrete tau=0.3 D=0.05", disc, params(0.3, 0.05), fine},
      {"discrete tau=0.7 D=0.1", disc, params(0.7, 0.1), coarse},
  };
}

std::vector<VerifyResult> run_verify(const std::vector<VerifyCase>& cases, std::size_t runs,
                                     std::uint64_t base_seed, unsigned jobs) {
  std::vector<VerifyResult> out;
  for (const auto& vc : cases) {
    const double lambda = std::max(1.0, vc.dist.shape().support_max());
    const dist::Instance inst({vc.dist}, 0.5, lambda);
    const std::size_t m = vc.grid.size() - 1;
    struct Run {
      bool ok_mnbs = false, ok_naive = false;
      std::uint64_t q_mnbs = 0, q_naive = 0;
    };
    std::vector<Run> rs(runs);
    parallel_for(runs, jobs, [&](std::size_t i) {
      channel::Channel a(inst, base_seed + i);
      const auto ia = quantest::quant_est(a, 0, vc.grid, vc.params);
      rs[i].ok_mnbs = quantest::verify_interval(vc.dist, vc.grid, ia, vc.params.tau, vc.params.delta_relax);
      rs[i].q_mnbs = a.ledger().total_pulls + a.ledger().sentinel_queries;
      channel::Channel b(inst, channel::mix64(base_seed + i));
      const auto ib = quantest::quant_est_naive(b, 0, vc.grid, vc.params);
      rs[i].ok_naive = quantest::verify_interval(vc.dist, vc.grid, ib, vc.params.tau, vc.params.delta_relax);
      rs[i].q_naive = b.ledger().total_pulls + b.ledger().sentinel_queries;
    });
    VerifyResult r;
    r.name = vc.name;
    r.runs = runs;
    r.t_max = quantest::query_budget(vc.params, m);
    double sa = 0, sb = 0, qa = 0, qb = 0;
    for (const auto& x : rs) {
      sa += x.ok_mnbs;
      sb += x.ok_naive;
      qa += static_cast<double>(x.q_mnbs);
      qb += static_cast<double>(x.q_naive);
      r.max_queries_mnbs = std::max(r.max_queries_mnbs, x.q_mnbs);
      r.max_queries_naive = std::max(r.max_queries_naive, x.q_naive);
    }
    const double n = std::max<double>(1.0, static_cast<double>(runs));
    r.success_mnbs = sa / n;
    r.success_naive = sb / n;
    r.mean_queries_mnbs = qa / n;
    r.mean_queries_naive = qb / n;
    out.push_back(std::move(r));
  }
  return out;
}

std::string verify_csv(const std::vector<VerifyResult>& results) {
  std::ostringstream out;
  out << "case,runs,t_max,success_mnbs,mean_queries_mnbs,max_queries_mnbs,success_naive,"
         "mean_queries_naive,max_queries_naive\n";
  for (const auto& r : results) {
    out << '"' << r.name << "\"," << r.runs << ',' << r.t_max << ',' << format_real(r.success_mnbs)
        << ',' << format_real(r.mean_queries_mnbs) << ',' << r.max_queries_mnbs << ','
        << format_real(r.success_naive) << ',' << format_real(r.mean_queries_naive) << ','
        << r.max_queries_naive << '\n';
  }
  return out.str();
}

std::string verify_json(const std::vector<VerifyResult>& results) {
  json j;
  j["version"] = std::string(kVersion);
  j["cases"] = json::array();
  for (const auto& r : results) {
    j["cases"].push_back({{"case", r.name},
                          {"runs", r.runs},
                          {"t_max", r.t_max},
                          {"success_mnbs", r.success_mnbs},
                          {"mean_queries_mnbs", r.mean_queries_mnbs},
                          {"max_queries_mnbs", r.max_queries_mnbs},
                          {"success_naive", r.success_naive},
                          {"mean_queries_naive", r.mean_queries_naive},
                          {"max_queries_naive", r.max_queries_naive}});
  }
  return j.dump(2) + "\n";
}

}  // namespace qbai::bench

// qbai: instance generation, gap reports and seeded studies for quantile best-arm identification
// under one-bit threshold feedback.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "qbai/bench.hpp"
#include "qbai/gaps.hpp"
#include "qbai/io.hpp"

namespace {

using namespace qbai;

struct InstanceArgs {
  std::string path;
  std::string generator;
  std::string params;
  std::optional<double> q;
  std::optional<double> lambda;

  void add(CLI::App* cmd) {
    cmd->add_option("--instance", path, "Instance JSON file");
    cmd->add_option("--generator", generator,
                    "lower-bound | prop13 | appendix-f1 | deterministic | perturb");
    cmd->add_option("--params", params, "Generator parameters, K=V,...");
    cmd->add_option("--q", q, "Quantile level (overrides the instance)");
    cmd->add_option("--lambda", lambda, "Quantile bound (overrides the instance)");
  }

  dist::Instance load() const {
    std::optional<dist::Instance> base;
    if (!path.empty()) base = dist::load_instance(path);
    if (generator.empty() && !base) throw CLI::ValidationError("need --instance or --generator");
    dist::Instance inst = generator.empty()
                              ? *base
                              : bench::make_named_instance(generator, bench::parse_params(params),
                                                           base ? &*base : nullptr);
    if (q || lambda) {
      std::vector<dist::RewardDistribution> arms(inst.arms().begin(), inst.arms().end());
      inst = dist::Instance(std::move(arms), q.value_or(inst.q()), lambda.value_or(inst.lambda()));
    }
    spdlog::info("instance: {} arms, q={}, lambda={}", inst.size(), inst.q(), inst.lambda());
    return inst;
  }
};

/// "inf" selects the c -> infinity limit.
std::optional<int> parse_c(const std::string& text) {
  if (text == "inf") return std::nullopt;
  const int c = std::stoi(text);
  if (c < 1) throw CLI::ValidationError("--c must be a positive integer or inf");
  return c;
}

void emit(const std::string& out, const std::string& ext, const std::string& content) {
  if (out.empty()) return;
  const std::string path = out + ext;
  write_file_atomic(path, content);
  spdlog::info("wrote {}", path);
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("qbai");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("QBAI_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

void log_trial(std::size_t i, const engine::RunResult& r) {
  spdlog::debug("trial {}: arm={} pulls={} rounds={}", i,
                r.returned_arm ? std::to_string(*r.returned_arm + 1) : "none",
                r.ledger.total_pulls, r.rounds.size());
  for (const auto& round : r.rounds) {
    for (const auto& a : round.arms) {
      spdlog::trace("trial {} t={} arm={} lcb={} ucb={} pulls={}", i, round.t, a.arm + 1, a.lcb,
                    a.ucb, a.pulls);
    }
  }
}

void print_aggregates(const bench::Aggregates& a) {
  std::cout << "trials " << a.trials << "\n"
            << "success_rate " << format_real(a.success_rate) << " [" << format_real(a.success_ci_low)
            << ", " << format_real(a.success_ci_high) << "]\n"
            << "median_total_pulls " << format_real(a.median_total_pulls) << "\n"
            << "mean_rounds " << format_real(a.mean_rounds) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Quantile best-arm identification with one-bit threshold feedback"};
  app.require_subcommand(1);

  unsigned jobs = bench::default_jobs();
  std::uint64_t seed = 1;
  std::string out;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out, "Output path prefix (.csv / .json appended)");
  };
  auto add_parallel = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Base seed; trial i uses seed + i");
    cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  };

  // gaps
  InstanceArgs gaps_inst;
  double gaps_eps = 0.1;
  std::string gaps_c = "1";
  std::optional<double> gaps_theta;
  auto* gaps_cmd = app.add_subcommand("gaps", "Per-arm gap report");
  gaps_inst.add(gaps_cmd);
  gaps_cmd->add_option("--eps", gaps_eps, "Tolerance eps")->required();
  auto* c_opt = gaps_cmd->add_option("--c", gaps_c, "Discretisation c, or inf");
  gaps_cmd->add_option("--theta", gaps_theta, "Pick the smallest c covering theta")->excludes(c_opt);
  add_common(gaps_cmd);
  gaps_cmd->callback([&] {
    const auto inst = gaps_inst.load();
    const std::optional<int> c = gaps_theta ? gaps::choose_c(*gaps_theta) : parse_c(gaps_c);
    const auto report = gaps::gap_report(inst, gaps::GapConfig::for_instance(inst, gaps_eps, c));
    const auto csv = gaps::gap_report_csv(report);
    emit(out, ".csv", csv);
    emit(out, ".json", gaps::gap_report_json(report));
    if (out.empty()) std::cout << csv;
  });

  // run
  InstanceArgs run_inst;
  engine::AlgoConfig cfg;
  std::optional<double> run_eps;
  std::optional<double> eps_fraction;
  std::size_t trials = 100;
  auto* run_cmd = app.add_subcommand("run", "Seeded reliability and pull-count study");
  run_inst.add(run_cmd);
  auto* eps_opt = run_cmd->add_option("--eps", run_eps, "Tolerance eps");
  run_cmd->add_option("--eps-fraction", eps_fraction, "eps as a fraction of the top quantile separation")
      ->excludes(eps_opt);
  run_cmd->add_option("--delta", cfg.delta, "Failure probability");
  run_cmd->add_option("--c", cfg.c, "Discretisation c")->check(CLI::PositiveNumber);
  run_cmd->add_option("--max-rounds", cfg.max_rounds, "Round cap")->check(CLI::PositiveNumber);
  run_cmd->add_option("--loop-constant", cfg.loop_constant, "Query-budget constant C");
  run_cmd->add_option("--trials", trials, "Number of trials")->check(CLI::PositiveNumber);
  add_parallel(run_cmd);
  add_common(run_cmd);
  run_cmd->callback([&] {
    auto inst = run_inst.load();
    if (!run_eps && !eps_fraction) throw CLI::ValidationError("need --eps or --eps-fraction");
    cfg.eps = run_eps ? *run_eps : bench::separation_eps(inst, *eps_fraction);
    cfg.q = inst.q();
    cfg.lambda = inst.lambda();
    bench::ExperimentSpec spec{std::move(inst), cfg, trials, seed, jobs};
    const auto report = bench::run_study(spec, log_trial);
    emit(out, ".csv", bench::study_csv(report));
    emit(out, ".json", bench::study_json(report, spec));
    print_aggregates(report.aggregates);
  });

  // scaling
  std::string sweep = "gamma";
  bench::GammaSweep gs;
  bench::RatioSweep rs;
  std::vector<double> values;
  std::optional<double> sc_delta;
  std::optional<int> sc_c;
  std::optional<std::size_t> sc_trials;
  std::optional<double> sc_loop;
  auto* sc_cmd = app.add_subcommand("scaling", "Median-pull scaling sweeps");
  sc_cmd->add_option("--sweep", sweep, "gamma | ratio")->check(CLI::IsMember({"gamma", "ratio"}));
  sc_cmd->add_option("--values", values, "gamma values or lambda/eps ratios")->delimiter(',');
  sc_cmd->add_option("--arms", gs.arms, "Arms in the gamma sweep");
  sc_cmd->add_option("--q", gs.q, "Quantile level in the gamma sweep");
  sc_cmd->add_option("--eps-fraction", gs.eps_fraction, "eps as a fraction of the quantile separation");
  sc_cmd->add_option("--delta", sc_delta, "Failure probability");
  sc_cmd->add_option("--c", sc_c, "Discretisation c")->check(CLI::PositiveNumber);
  sc_cmd->add_option("--loop-constant", sc_loop, "Query-budget constant C");
  sc_cmd->add_option("--trials", sc_trials, "Trials per point")->check(CLI::PositiveNumber);
  add_parallel(sc_cmd);
  add_common(sc_cmd);
  sc_cmd->callback([&] {
    bench::ScalingReport report;
    if (sweep == "gamma") {
      if (!values.empty()) gs.gammas = values;
      if (sc_delta) gs.delta = *sc_delta;
      if (sc_c) gs.c = *sc_c;
      if (sc_trials) gs.trials = *sc_trials;
      if (sc_loop) gs.loop_constant = *sc_loop;
      gs.base_seed = seed;
      gs.jobs = jobs;
      report = bench::gamma_sweep(gs, log_trial);
    } else {
      if (!values.empty()) rs.ratios = values;
      if (sc_delta) rs.delta = *sc_delta;
      if (sc_c) rs.c = *sc_c;
      if (sc_trials) rs.trials = *sc_trials;
      if (sc_loop) rs.loop_constant = *sc_loop;
      rs.base_seed = seed;
      rs.jobs = jobs;
      report = bench::ratio_sweep(rs);
    }
    const auto csv = bench::scaling_csv(report);
    emit(out, ".csv", csv);
    emit(out, ".json", bench::scaling_json(report));
    std::cout << csv;
  });

  // quantest-verify
  std::size_t runs = 1000;
  double qv_loop = quantest::kDefaultLoopConstant;
  auto* qv_cmd = app.add_subcommand("quantest-verify", "Success rates of both quantile searches");
  qv_cmd->add_option("--runs", runs, "Runs per matrix row")->check(CLI::PositiveNumber);
  qv_cmd->add_option("--loop-constant", qv_loop, "Query-budget constant C");
  add_parallel(qv_cmd);
  add_common(qv_cmd);
  qv_cmd->callback([&] {
    const auto results = bench::run_verify(bench::default_verify_matrix(qv_loop), runs, seed, jobs);
    const auto csv = bench::verify_csv(results);
    emit(out, ".csv", csv);
    emit(out, ".json", bench::verify_json(results));
    std::cout << csv;
  });

  // make-instance
  InstanceArgs mk_inst;
  std::string mk_out;
  auto* mk_cmd = app.add_subcommand("make-instance", "Write a generated instance as JSON");
  mk_inst.add(mk_cmd);
  mk_cmd->add_option("--out", mk_out, "Output file (stdout if omitted)");
  mk_cmd->callback([&] {
    if (mk_inst.generator.empty()) throw CLI::ValidationError("make-instance needs --generator");
    const auto inst = mk_inst.load();
    if (mk_out.empty()) {
      std::cout << dist::instance_to_json(inst);
    } else {
      dist::save_instance(inst, mk_out);
      spdlog::info("wrote {}", mk_out);
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}

// Command-line front end: run experiments, sweep detection windows, print
// the greedy benchmark, or validate a config file.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tibandit/harness.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::string output_dir;
  std::int64_t horizon = -1;
  int replications = -1;
  int workers = -1;
  long long seed = -1;
  bool resample_env = false;

  tibandit::ExperimentConfig load() const {
    auto cfg = tibandit::ExperimentConfig::from_file(config_path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (horizon >= 0) cfg.horizon = horizon;
    if (replications >= 0) cfg.replications = replications;
    if (workers >= 0) cfg.workers = workers;
    if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
    if (resample_env) cfg.resample_env_per_replication = true;
    return cfg;
  }
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("config", o.config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--output-dir", o.output_dir, "override output directory");
  cmd->add_option("--horizon", o.horizon, "override horizon T");
  cmd->add_option("--replications", o.replications, "override replication count");
  cmd->add_option("--workers", o.workers, "override worker count");
  cmd->add_option("--seed", o.seed, "override master seed");
  cmd->add_flag("--resample-env-per-rep", o.resample_env,
                "resample environment parameters for every replication");
}

int validate_only(const tibandit::ExperimentConfig& cfg) {
  const auto errors = cfg.validate();
  if (errors.empty()) {
    std::cout << "config ok\n";
    return 0;
  }
  for (const auto& e : errors) std::cerr << "invalid: " << e << "\n";
  return 2;
}

void print_summary(const tibandit::RunResult& result) {
  for (const auto& stats : result.policies) {
    std::printf("%-16s final regret %14.4f  (mean over %zu replications)\n",
                stats.label.c_str(), stats.mean_final_regret(),
                stats.final_regrets.size());
  }
  std::printf("wall clock: %.2fs\n", result.wall_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rested-bandit experiment harness"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run_cmd = app.add_subcommand("run", "execute the configured experiment");
  add_common_flags(run_cmd, run_opts);

  Overrides sweep_opts;
  std::vector<int> omegas;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "run once per detection window size");
  add_common_flags(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--omegas", omegas,
                        "window sizes (defaults to config sweep.omegas)");

  Overrides oracle_opts;
  auto* oracle_cmd =
      app.add_subcommand("oracle", "print the greedy benchmark allocation");
  add_common_flags(oracle_cmd, oracle_opts);

  Overrides validate_opts;
  auto* validate_cmd = app.add_subcommand("validate", "check a config file");
  add_common_flags(validate_cmd, validate_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto cfg = run_opts.load();
      if (const auto errors = cfg.validate(); !errors.empty()) {
        for (const auto& e : errors) std::cerr << "invalid: " << e << "\n";
        return 2;
      }
      const auto result = tibandit::run_experiment(cfg);
      print_summary(result);
      if (!cfg.output_dir.empty()) {
        std::cout << "results written to " << cfg.output_dir << "\n";
      }
      return 0;
    }
    if (sweep_cmd->parsed()) {
      const auto cfg = sweep_opts.load();
      if (const auto errors = cfg.validate(); !errors.empty()) {
        for (const auto& e : errors) std::cerr << "invalid: " << e << "\n";
        return 2;
      }
      const auto rows = tibandit::sweep_window(cfg, omegas);
      std::printf("%8s %20s %14s\n", "omega", "mean_final_regret", "stderr");
      for (const auto& row : rows) {
        std::printf("%8d %20.4f %14.4f\n", row.omega, row.mean_final_regret,
                    row.stderr_final_regret);
      }
      return 0;
    }
    if (oracle_cmd->parsed()) {
      const auto cfg = oracle_opts.load();
      const auto report = tibandit::oracle_report(cfg);
      std::cout << report.to_json().dump(2) << "\n";
      return 0;
    }
    if (validate_cmd->parsed()) {
      return validate_only(validate_opts.load());
    }
  } catch (const tibandit::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

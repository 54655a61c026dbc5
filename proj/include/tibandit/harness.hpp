#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tibandit/baselines.hpp"
#include "tibandit/core.hpp"
#include "tibandit/environments.hpp"
#include "tibandit/regret.hpp"
#include "tibandit/ti_ucb.hpp"
#include "tibandit/version.hpp"

namespace tibandit {

using nlohmann::json;

// ---- Configuration -------------------------------------------------------------

struct PolicySpec {
  std::string name;    // ti_ucb | kl_ucb | sw_ucb | sw_ts | sw_kl_ucb | rexp3 | ser4 | greedy_oracle
  std::string label;   // column label in outputs; defaults to name
  json params;         // optional overrides, resolved against the horizon
};

inline std::string effective_label(const PolicySpec& spec) {
  return spec.label.empty() ? spec.name : spec.label;
}

struct ExperimentConfig {
  std::int64_t horizon = 0;
  int replications = 20;
  std::uint64_t master_seed = 0;
  int workers = 0;  // 0 = hardware concurrency
  std::string output_dir;
  RewardBounds reward_bounds;
  bool resample_env_per_replication = false;
  int plot_points = 2000;
  bool debug_per_replication = false;
  json environment;
  std::vector<PolicySpec> policies;
  std::vector<int> sweep_omegas;

  static ExperimentConfig from_json(const json& j);
  static ExperimentConfig from_file(const std::string& path);
  std::vector<std::string> validate() const;
  json to_json() const;
};

inline const std::vector<std::string>& known_policies() {
  static const std::vector<std::string> names = {
      "ti_ucb", "kl_ucb", "sw_ucb", "sw_ts", "sw_kl_ucb",
      "rexp3",  "ser4",   "greedy_oracle"};
  return names;
}

inline ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.horizon = j.value("horizon", std::int64_t{0});
  cfg.replications = j.value("replications", 20);
  cfg.master_seed = j.value("master_seed", std::uint64_t{0});
  cfg.workers = j.value("workers", 0);
  cfg.output_dir = j.value("output_dir", std::string{});
  if (j.contains("reward_bounds")) {
    const auto& b = j.at("reward_bounds");
    cfg.reward_bounds = RewardBounds{b.at(0).get<double>(), b.at(1).get<double>()};
  }
  cfg.resample_env_per_replication =
      j.value("resample_env_per_replication", false);
  cfg.plot_points = j.value("plot_points", 2000);
  cfg.debug_per_replication = j.value("debug_per_replication", false);
  cfg.environment = j.value("environment", json::object());
  if (j.contains("policies")) {
    for (const auto& p : j.at("policies")) {
      PolicySpec spec;
      if (p.is_string()) {
        spec.name = p.get<std::string>();
      } else {
        spec.name = p.value("name", std::string{});
        spec.label = p.value("label", std::string{});
        spec.params = p;
        spec.params.erase("name");
        spec.params.erase("label");
      }
      if (spec.label.empty()) spec.label = spec.name;
      cfg.policies.push_back(std::move(spec));
    }
  }
  if (j.contains("sweep") && j.at("sweep").contains("omegas")) {
    cfg.sweep_omegas = j.at("sweep").at("omegas").get<std::vector<int>>();
  }
  return cfg;
}

inline ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return from_json(j);
}

inline std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  if (horizon < 1) errors.push_back("horizon: must be >= 1");
  if (replications < 1) errors.push_back("replications: must be >= 1");
  if (workers < 0) errors.push_back("workers: must be >= 0");
  if (!(reward_bounds.hi > reward_bounds.lo)) {
    errors.push_back("reward_bounds: upper bound must exceed lower bound");
  }
  if (plot_points < 0) errors.push_back("plot_points: must be >= 0");
  if (policies.empty()) errors.push_back("policies: at least one required");
  std::vector<std::string> labels;
  for (const auto& p : policies) {
    if (std::find(known_policies().begin(), known_policies().end(), p.name) ==
        known_policies().end()) {
      errors.push_back("policies: unknown policy '" + p.name + "'");
    }
    const std::string label = effective_label(p);
    if (std::find(labels.begin(), labels.end(), label) != labels.end()) {
      errors.push_back("policies: duplicate label '" + label + "'");
    }
    labels.push_back(label);
  }
  const std::string type =
      environment.is_object() ? environment.value("type", std::string{})
                              : std::string{};
  if (type == "synthetic") {
    if (!environment.contains("arms") || environment.at("arms").empty()) {
      errors.push_back("environment.arms: at least one arm required");
    }
    if (environment.value("sigma", 0.0) < 0.0) {
      errors.push_back("environment.sigma: must be >= 0");
    }
  } else if (type == "family") {
    const std::string kind = environment.value("kind", std::string{});
    if (kind != "exp" && kind != "poly") {
      errors.push_back("environment.kind: must be 'exp' or 'poly'");
    }
    if (environment.value("num_arms", 0) < 1) {
      errors.push_back("environment.num_arms: must be >= 1");
    }
  } else if (type == "trace") {
    if (!environment.contains("path")) {
      errors.push_back("environment.path: required for trace environments");
    }
  } else if (type == "cost_adjusted") {
    if (!environment.contains("inner")) {
      errors.push_back("environment.inner: required for cost_adjusted");
    }
    if (environment.contains("cost") && environment.at("cost").is_number() &&
        environment.at("cost").get<double>() < 0.0) {
      errors.push_back("environment.cost: must be >= 0");
    }
  } else {
    errors.push_back("environment.type: must be one of synthetic|family|trace|cost_adjusted");
  }
  for (int omega : sweep_omegas) {
    if (omega < 1) errors.push_back("sweep.omegas: window sizes must be >= 1");
  }
  return errors;
}

inline json ExperimentConfig::to_json() const {
  json j;
  j["horizon"] = horizon;
  j["replications"] = replications;
  j["master_seed"] = master_seed;
  j["workers"] = workers;
  j["output_dir"] = output_dir;
  j["reward_bounds"] = {reward_bounds.lo, reward_bounds.hi};
  j["resample_env_per_replication"] = resample_env_per_replication;
  j["plot_points"] = plot_points;
  j["debug_per_replication"] = debug_per_replication;
  j["environment"] = environment;
  j["policies"] = json::array();
  for (const auto& p : policies) {
    json pj = p.params;
    pj["name"] = p.name;
    pj["label"] = p.label;
    j["policies"].push_back(pj);
  }
  if (!sweep_omegas.empty()) j["sweep"] = {{"omegas", sweep_omegas}};
  return j;
}

// ---- Environment construction -----------------------------------------------------

inline json arm_to_json(const ArmMean& arm) {
  json j;
  if (const auto* e = std::get_if<ExpArm>(&arm)) {
    j = {{"family", "exp"}, {"a", e->a}, {"c", e->c}};
  } else if (const auto* p = std::get_if<PolyArm>(&arm)) {
    j = {{"family", "poly"}, {"b", p->b}, {"c", p->c}, {"rho", p->rho}};
  } else if (const auto* w = std::get_if<PiecewiseLinearArm>(&arm)) {
    j = {{"family", "piecewise"},
         {"slope", w->slope},
         {"intercept", w->intercept},
         {"plateau", w->plateau},
         {"change_point", w->change_point}};
  }
  return j;
}

inline ArmMean arm_from_json(const json& j) {
  const std::string family = j.value("family", std::string{});
  if (family == "exp") {
    return ExpArm{j.at("a").get<double>(), j.at("c").get<double>()};
  }
  if (family == "poly") {
    return PolyArm{j.at("b").get<double>(), j.at("c").get<double>(),
                   j.at("rho").get<double>()};
  }
  if (family == "piecewise") {
    const auto change_point = j.at("change_point").get<std::int64_t>();
    const double slope = j.at("slope").get<double>();
    const double intercept = j.value("intercept", 0.0);
    if (j.contains("plateau")) {
      return PiecewiseLinearArm{slope, intercept, j.at("plateau").get<double>(),
                                change_point};
    }
    return PiecewiseLinearArm::continuous(slope, intercept, change_point);
  }
  throw ConfigError("unknown arm family '" + family + "'");
}

// Builds per-task environment instances from the config. Family parameters
// are sampled once from the master seed (or per replication when
// resampling is enabled) so the manifest pins the exact arms used.
class EnvFactory {
 public:
  EnvFactory(const json& spec, std::uint64_t master_seed, bool resample_per_rep)
      : spec_(spec), master_seed_(master_seed), resample_(resample_per_rep) {
    const std::string type = spec_.value("type", std::string{});
    if (type == "trace") {
      auto data = std::make_shared<TraceData>(
          load_trace(spec_.at("path").get<std::string>()));
      trace_ = std::move(data);
    } else if (type == "cost_adjusted") {
      const std::string inner_type =
          spec_.at("inner").value("type", std::string{});
      if (inner_type == "trace") {
        trace_ = std::make_shared<TraceData>(
            load_trace(spec_.at("inner").at("path").get<std::string>()));
      }
    }
    resolved_ = resolve(spec_, 0);
  }

  std::unique_ptr<Environment> make(int replication) const {
    return build(resolve(spec_, replication));
  }

  // Fully resolved spec (sampled arms inlined) for the given replication.
  json resolved_spec(int replication = 0) const {
    return resample_ ? resolve(spec_, replication) : resolved_;
  }

  bool resamples_per_replication() const { return resample_; }

  bool is_trace() const {
    return spec_.value("type", std::string{}) == "trace";
  }

  int num_arms() const { return build(resolved_)->num_arms(); }

 private:
  json resolve(const json& spec, int replication) const {
    const std::string type = spec.value("type", std::string{});
    if (type == "family") {
      FamilyRanges ranges;
      if (spec.contains("ranges")) {
        const auto& r = spec.at("ranges");
        auto read = [&](const char* key, std::pair<double, double>& into) {
          if (r.contains(key)) {
            into = {r.at(key).at(0).get<double>(), r.at(key).at(1).get<double>()};
          }
        };
        read("a", ranges.a);
        read("c", ranges.c);
        read("b", ranges.b);
        read("rho", ranges.rho);
      }
      const Family family =
          spec.at("kind").get<std::string>() == "exp" ? Family::kExp : Family::kPoly;
      const std::uint64_t seed =
          spec.contains("param_seed")
              ? spec.at("param_seed").get<std::uint64_t>()
              : derive_seed(master_seed_, stream_tag::kEnvParams,
                            resample_ ? replication : 0);
      const auto arms =
          sample_family(family, spec.at("num_arms").get<int>(), seed, ranges);
      json resolved;
      resolved["type"] = "synthetic";
      resolved["sigma"] = spec.value("sigma", 0.1);
      if (spec.contains("clamp")) resolved["clamp"] = spec.at("clamp");
      resolved["sampled_from"] = spec;
      resolved["param_seed"] = seed;
      resolved["arms"] = json::array();
      for (const auto& arm : arms) resolved["arms"].push_back(arm_to_json(arm));
      return resolved;
    }
    if (type == "cost_adjusted") {
      json resolved = spec;
      resolved["inner"] = resolve(spec.at("inner"), replication);
      return resolved;
    }
    return spec;
  }

  std::unique_ptr<Environment> build(const json& resolved) const {
    const std::string type = resolved.value("type", std::string{});
    if (type == "synthetic") {
      std::vector<ArmMean> arms;
      for (const auto& aj : resolved.at("arms")) {
        arms.push_back(arm_from_json(aj));
      }
      std::optional<std::pair<double, double>> clamp;
      if (resolved.contains("clamp") && !resolved.at("clamp").is_null()) {
        clamp = {resolved.at("clamp").at(0).get<double>(),
                 resolved.at("clamp").at(1).get<double>()};
      }
      return std::make_unique<SyntheticEnvironment>(
          std::move(arms), resolved.value("sigma", 0.1), clamp);
    }
    if (type == "trace") {
      return std::make_unique<TraceEnvironment>(trace_);
    }
    if (type == "cost_adjusted") {
      std::shared_ptr<Environment> inner;
      const json& inner_spec = resolved.at("inner");
      if (inner_spec.value("type", std::string{}) == "trace") {
        inner = std::make_shared<TraceEnvironment>(trace_);
      } else {
        inner = build(inner_spec);
      }
      const std::int64_t window = resolved.value("stall_window", std::int64_t{100});
      const double threshold = resolved.value("stall_threshold", 0.1);
      if (resolved.contains("cost") && resolved.at("cost").is_array()) {
        return std::make_unique<CostAdjustedEnvironment>(
            inner, resolved.at("cost").get<std::vector<double>>(), window,
            threshold);
      }
      return std::make_unique<CostAdjustedEnvironment>(
          inner, resolved.value("cost", 0.0), window, threshold);
    }
    throw ConfigError("unknown environment type '" + type + "'");
  }

  json spec_;
  std::uint64_t master_seed_;
  bool resample_;
  json resolved_;
  std::shared_ptr<const TraceData> trace_;
};

// ---- Policy construction ------------------------------------------------------------

// Instantiates a policy with Appendix-style defaults resolved from the
// horizon and arm count; `resolved` receives the effective parameters.
inline std::unique_ptr<Policy> make_policy(const PolicySpec& spec, int num_arms,
                                           std::int64_t horizon,
                                           const RewardBounds& bounds,
                                           std::uint64_t seed,
                                           const Environment* env,
                                           json* resolved = nullptr) {
  const json p = spec.params.is_object() ? spec.params : json::object();
  json effective;
  std::unique_ptr<Policy> policy;
  if (spec.name == "ti_ucb") {
    TiUcbParams params;
    params.delta = p.value("delta", 1.0 / static_cast<double>(horizon));
    params.omega = p.value("omega", 100);
    params.gamma = p.value("gamma", 0.3);
    params.exploration_scale = p.value("exploration_scale", 16.0);
    effective = {{"delta", params.delta},
                 {"omega", params.omega},
                 {"gamma", params.gamma},
                 {"exploration_scale", params.exploration_scale}};
    policy = std::make_unique<TiUcbPolicy>(num_arms, params);
  } else if (spec.name == "kl_ucb") {
    const double c = p.value("c", 3.0);
    effective = {{"c", c}};
    policy = std::make_unique<KlUcbPolicy>(num_arms, c, bounds);
  } else if (spec.name == "sw_ucb") {
    const std::int64_t tau = p.value("tau", default_sw_ucb_tau(horizon));
    const double xi = p.value("xi", 0.6);
    effective = {{"tau", tau}, {"xi", xi}};
    policy = std::make_unique<SwUcbPolicy>(num_arms, tau, xi, bounds);
  } else if (spec.name == "sw_ts") {
    const std::int64_t tau = p.value("tau", default_sw_ts_tau(horizon));
    effective = {{"tau", tau}};
    policy = std::make_unique<SwTsPolicy>(num_arms, tau, seed, bounds);
  } else if (spec.name == "sw_kl_ucb") {
    const std::int64_t tau = p.value("tau", default_sw_kl_ucb_tau(horizon));
    const double c = p.value("c", 3.0);
    effective = {{"tau", tau}, {"c", c}};
    policy = std::make_unique<SwKlUcbPolicy>(num_arms, tau, c, bounds);
  } else if (spec.name == "rexp3") {
    const std::int64_t batch = p.value("batch", default_rexp3_batch(num_arms, horizon));
    const double gamma = p.value("gamma", default_rexp3_gamma(num_arms, batch));
    effective = {{"batch", batch}, {"gamma", gamma}};
    policy = std::make_unique<Rexp3Policy>(num_arms, batch, gamma, seed, bounds);
  } else if (spec.name == "ser4") {
    const double delta = p.value("delta", 1.0 / static_cast<double>(horizon));
    const double epsilon =
        p.value("epsilon", 1.0 / (static_cast<double>(num_arms) *
                                  static_cast<double>(horizon)));
    const double phi = p.value(
        "phi", default_ser4_phi(num_arms, horizon,
                                p.value("num_switches",
                                        static_cast<double>(num_arms))));
    effective = {{"delta", delta}, {"epsilon", epsilon}, {"phi", phi}};
    policy = std::make_unique<Ser4Policy>(num_arms, delta, epsilon, phi, seed, bounds);
  } else if (spec.name == "greedy_oracle") {
    if (env == nullptr) {
      throw ConfigError("greedy_oracle policy needs a known-mean environment");
    }
    effective = json::object();
    policy = std::make_unique<GreedyPolicy>(*env);
  } else {
    throw ConfigError("unknown policy '" + spec.name + "'");
  }
  if (resolved) *resolved = effective;
  return policy;
}

// ---- Results --------------------------------------------------------------------

struct PolicyRunStats {
  std::string label;
  json resolved_params;
  std::vector<double> mean_regret;            // length T
  std::vector<double> stderr_regret;          // length T
  std::vector<double> final_regrets;          // one per replication
  std::vector<std::vector<std::int64_t>> final_counts;  // [rep][arm]
  std::vector<std::pair<int, Detection>> detections;    // (replication, event)

  double mean_final_regret() const {
    double sum = 0.0;
    for (double r : final_regrets) sum += r;
    return sum / static_cast<double>(final_regrets.size());
  }
};

struct RunResult {
  std::vector<PolicyRunStats> policies;
  json manifest;
  double wall_seconds = 0.0;

  const PolicyRunStats& stats(const std::string& label) const {
    for (const auto& p : policies) {
      if (p.label == label) return p;
    }
    throw ConfigError("no policy labelled '" + label + "' in results");
  }
};

namespace detail {

inline std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

struct ReplicationOutcome {
  std::vector<double> regret;  // cumulative expected regret per step
  std::vector<std::int64_t> counts;
  std::vector<Detection> detections;
};

}  // namespace detail

// ---- Runner ---------------------------------------------------------------------

// Executes replications for every configured policy, aggregates regret
// curves, and (when output_dir is set) writes regret_curves.csv,
// detections.csv, manifest.json and optional plot/debug files. Tasks run on
// a worker pool; outputs depend only on the config and master seed, not on
// scheduling.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  if (const auto errors = cfg.validate(); !errors.empty()) {
    std::string joined = "invalid config:";
    for (const auto& e : errors) joined += "\n  - " + e;
    throw ConfigError(joined);
  }

  EnvFactory factory(cfg.environment, cfg.master_seed,
                     cfg.resample_env_per_replication);
  const int num_arms = factory.num_arms();
  const std::int64_t horizon = cfg.horizon;
  const int reps = cfg.replications;
  const int num_policies = static_cast<int>(cfg.policies.size());

  // Greedy benchmark traces, one per distinct environment realization.
  std::vector<std::shared_ptr<const std::vector<double>>> greedy(
      static_cast<std::size_t>(cfg.resample_env_per_replication ? reps : 1));
  for (std::size_t i = 0; i < greedy.size(); ++i) {
    const auto env = factory.make(static_cast<int>(i));
    greedy[i] = std::make_shared<const std::vector<double>>(
        greedy_reward_trace(*env, horizon));
  }
  auto greedy_for = [&](int rep) -> const std::vector<double>& {
    return *greedy[cfg.resample_env_per_replication ? static_cast<std::size_t>(rep)
                                                    : 0];
  };

  std::vector<std::vector<detail::ReplicationOutcome>> outcomes(
      static_cast<std::size_t>(num_policies));
  for (auto& per_policy : outcomes) {
    per_policy.resize(static_cast<std::size_t>(reps));
  }

  const int total_tasks = num_policies * reps;
  std::atomic<int> next_task{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    try {
      while (true) {
        const int task = next_task.fetch_add(1);
        if (task >= total_tasks) break;
        const int policy_index = task / reps;
        const int rep = task % reps;
        const auto& spec = cfg.policies[static_cast<std::size_t>(policy_index)];

        const auto env = factory.make(rep);
        const auto policy = make_policy(
            spec, num_arms, horizon, cfg.reward_bounds,
            derive_seed(cfg.master_seed, stream_tag::kPolicy, policy_index, rep),
            env.get());
        const auto samples = run_episode(
            *env, *policy, horizon,
            derive_seed(cfg.master_seed, stream_tag::kEpisode, policy_index, rep));

        auto& outcome = outcomes[static_cast<std::size_t>(policy_index)]
                                [static_cast<std::size_t>(rep)];
        const auto& bench = greedy_for(rep);
        outcome.regret.resize(static_cast<std::size_t>(horizon));
        outcome.counts.assign(static_cast<std::size_t>(num_arms), 0);
        double cum = 0.0;
        for (std::int64_t t = 1; t <= horizon; ++t) {
          const auto& s = samples[static_cast<std::size_t>(t - 1)];
          ++outcome.counts[static_cast<std::size_t>(s.arm)];
          cum += env->mean(s.arm, s.pull_index);
          outcome.regret[static_cast<std::size_t>(t - 1)] =
              bench[static_cast<std::size_t>(t - 1)] - cum;
        }
        outcome.detections = policy->detections();
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  int worker_count = cfg.workers > 0
                         ? cfg.workers
                         : static_cast<int>(std::thread::hardware_concurrency());
  worker_count = std::max(1, std::min(worker_count, total_tasks));
  {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (int i = 0; i < worker_count; ++i) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Aggregation in fixed replication order.
  RunResult result;
  for (int policy_index = 0; policy_index < num_policies; ++policy_index) {
    const auto& spec = cfg.policies[static_cast<std::size_t>(policy_index)];
    PolicyRunStats stats;
    stats.label = effective_label(spec);
    {
      const auto env = factory.make(0);
      make_policy(spec, num_arms, horizon, cfg.reward_bounds,
                  derive_seed(cfg.master_seed, stream_tag::kPolicy, policy_index, 0),
                  env.get(), &stats.resolved_params);
    }
    stats.mean_regret.assign(static_cast<std::size_t>(horizon), 0.0);
    stats.stderr_regret.assign(static_cast<std::size_t>(horizon), 0.0);
    const auto& per_rep = outcomes[static_cast<std::size_t>(policy_index)];
    for (int rep = 0; rep < reps; ++rep) {
      const auto& outcome = per_rep[static_cast<std::size_t>(rep)];
      for (std::int64_t t = 0; t < horizon; ++t) {
        stats.mean_regret[static_cast<std::size_t>(t)] +=
            outcome.regret[static_cast<std::size_t>(t)];
      }
      stats.final_regrets.push_back(outcome.regret.back());
      stats.final_counts.push_back(outcome.counts);
      for (const auto& d : outcome.detections) {
        stats.detections.emplace_back(rep, d);
      }
    }
    for (std::int64_t t = 0; t < horizon; ++t) {
      stats.mean_regret[static_cast<std::size_t>(t)] /= static_cast<double>(reps);
    }
    if (reps > 1) {
      for (int rep = 0; rep < reps; ++rep) {
        const auto& outcome = per_rep[static_cast<std::size_t>(rep)];
        for (std::int64_t t = 0; t < horizon; ++t) {
          const double d = outcome.regret[static_cast<std::size_t>(t)] -
                           stats.mean_regret[static_cast<std::size_t>(t)];
          stats.stderr_regret[static_cast<std::size_t>(t)] += d * d;
        }
      }
      for (std::int64_t t = 0; t < horizon; ++t) {
        auto& se = stats.stderr_regret[static_cast<std::size_t>(t)];
        se = std::sqrt(se / static_cast<double>(reps - 1)) /
             std::sqrt(static_cast<double>(reps));
      }
    }
    result.policies.push_back(std::move(stats));
  }

  // Manifest: resolved config, seeds, sampled parameters, version.
  json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = cfg.to_json();
  manifest["environment_resolved"] = factory.resolved_spec(0);
  if (cfg.resample_env_per_replication) {
    json per_rep = json::array();
    for (int rep = 0; rep < reps; ++rep) {
      per_rep.push_back(factory.resolved_spec(rep));
    }
    manifest["environment_resolved_per_replication"] = per_rep;
  }
  json seeds;
  seeds["master"] = cfg.master_seed;
  json policy_seeds = json::array();
  for (int policy_index = 0; policy_index < num_policies; ++policy_index) {
    json entry;
    entry["label"] = effective_label(cfg.policies[static_cast<std::size_t>(policy_index)]);
    entry["resolved_params"] =
        result.policies[static_cast<std::size_t>(policy_index)].resolved_params;
    json episode_seeds = json::array();
    json policy_rng_seeds = json::array();
    for (int rep = 0; rep < reps; ++rep) {
      episode_seeds.push_back(
          derive_seed(cfg.master_seed, stream_tag::kEpisode, policy_index, rep));
      policy_rng_seeds.push_back(
          derive_seed(cfg.master_seed, stream_tag::kPolicy, policy_index, rep));
    }
    entry["episode_seeds"] = episode_seeds;
    entry["policy_seeds"] = policy_rng_seeds;
    policy_seeds.push_back(entry);
  }
  seeds["policies"] = policy_seeds;
  manifest["seeds"] = seeds;
  result.manifest = manifest;

  if (!cfg.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);

    {
      std::ofstream out(dir / "regret_curves.csv", std::ios::binary);
      if (!out) throw std::runtime_error("cannot write to output dir " + cfg.output_dir);
      out << "step,policy,mean_regret,stderr\n";
      for (const auto& stats : result.policies) {
        for (std::int64_t t = 1; t <= horizon; ++t) {
          out << t << ',' << stats.label << ','
              << detail::format_double(
                     stats.mean_regret[static_cast<std::size_t>(t - 1)])
              << ','
              << detail::format_double(
                     stats.stderr_regret[static_cast<std::size_t>(t - 1)])
              << '\n';
        }
      }
    }
    {
      std::ofstream out(dir / "detections.csv", std::ios::binary);
      out << "policy,replication,arm,step\n";
      for (const auto& stats : result.policies) {
        for (const auto& [rep, d] : stats.detections) {
          out << stats.label << ',' << rep << ',' << d.arm << ',' << d.step << '\n';
        }
      }
    }
    {
      std::ofstream out(dir / "manifest.json", std::ios::binary);
      out << manifest.dump(2) << '\n';
    }
    if (cfg.plot_points > 0) {
      std::ofstream out(dir / "plot_data.csv", std::ios::binary);
      out << "step,policy,mean_regret,stderr\n";
      const std::int64_t points =
          std::min<std::int64_t>(cfg.plot_points, horizon);
      for (const auto& stats : result.policies) {
        for (std::int64_t k = 1; k <= points; ++k) {
          const auto t = static_cast<std::int64_t>(
              std::llround(static_cast<double>(k) * static_cast<double>(horizon) /
                           static_cast<double>(points)));
          out << t << ',' << stats.label << ','
              << detail::format_double(
                     stats.mean_regret[static_cast<std::size_t>(t - 1)])
              << ','
              << detail::format_double(
                     stats.stderr_regret[static_cast<std::size_t>(t - 1)])
              << '\n';
        }
      }
    }
    if (cfg.debug_per_replication) {
      std::ofstream out(dir / "debug_replications.csv", std::ios::binary);
      out << "policy,replication,step,regret\n";
      for (int policy_index = 0; policy_index < num_policies; ++policy_index) {
        const auto& stats = result.policies[static_cast<std::size_t>(policy_index)];
        const auto& per_rep = outcomes[static_cast<std::size_t>(policy_index)];
        for (int rep = 0; rep < reps; ++rep) {
          const auto& outcome = per_rep[static_cast<std::size_t>(rep)];
          for (std::int64_t t = 1; t <= horizon; ++t) {
            out << stats.label << ',' << rep << ',' << t << ','
                << detail::format_double(
                       outcome.regret[static_cast<std::size_t>(t - 1)])
                << '\n';
          }
        }
      }
    }
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return result;
}

// ---- Window sweep ----------------------------------------------------------------

struct SweepRow {
  int omega = 0;
  double mean_final_regret = 0.0;
  double stderr_final_regret = 0.0;
};

// One full run per window size, overriding omega for every ti_ucb policy.
// Emits sweep.csv when the config names an output directory.
inline std::vector<SweepRow> sweep_window(const ExperimentConfig& base,
                                          std::vector<int> omegas) {
  if (omegas.empty()) omegas = base.sweep_omegas;
  if (omegas.empty()) {
    throw ConfigError("sweep: no window sizes given (config sweep.omegas or --omegas)");
  }
  const bool has_ti_ucb =
      std::any_of(base.policies.begin(), base.policies.end(),
                  [](const PolicySpec& p) { return p.name == "ti_ucb"; });
  if (!has_ti_ucb) {
    throw ConfigError("sweep: ti_ucb must be among the configured policies");
  }

  std::vector<SweepRow> rows;
  for (int omega : omegas) {
    ExperimentConfig cfg = base;
    cfg.output_dir.clear();  // only the sweep table is written
    cfg.sweep_omegas.clear();
    for (auto& p : cfg.policies) {
      if (p.name == "ti_ucb") {
        if (p.params.is_null()) p.params = json::object();
        p.params["omega"] = omega;
      }
    }
    const RunResult result = run_experiment(cfg);
    for (std::size_t i = 0; i < cfg.policies.size(); ++i) {
      if (cfg.policies[i].name != "ti_ucb") continue;
      const auto& stats = result.policies[i];  // first ti_ucb policy reports
      SweepRow row;
      row.omega = omega;
      row.mean_final_regret = stats.mean_final_regret();
      if (stats.final_regrets.size() > 1) {
        double ss = 0.0;
        for (double r : stats.final_regrets) {
          const double d = r - row.mean_final_regret;
          ss += d * d;
        }
        row.stderr_final_regret =
            std::sqrt(ss / static_cast<double>(stats.final_regrets.size() - 1)) /
            std::sqrt(static_cast<double>(stats.final_regrets.size()));
      }
      rows.push_back(row);
      break;
    }
  }

  if (!base.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(base.output_dir);
    std::ofstream out(fs::path(base.output_dir) / "sweep.csv", std::ios::binary);
    out << "omega,mean_final_regret,stderr\n";
    for (const auto& row : rows) {
      out << row.omega << ',' << detail::format_double(row.mean_final_regret)
          << ',' << detail::format_double(row.stderr_final_regret) << '\n';
    }
  }
  return rows;
}

// ---- Greedy oracle report -----------------------------------------------------------

struct OracleReport {
  std::vector<std::int64_t> counts;
  double total_reward = 0.0;
  double min_gap = 0.0;

  json to_json() const {
    return {{"counts", counts},
            {"total_greedy_reward", total_reward},
            {"min_gap", min_gap}};
  }
};

inline OracleReport oracle_report(const ExperimentConfig& cfg) {
  if (cfg.horizon < 1) throw ConfigError("oracle: horizon must be >= 1");
  EnvFactory factory(cfg.environment, cfg.master_seed, false);
  if (factory.is_trace()) {
    throw ConfigError(
        "oracle: trace environments are unsupported without averaged estimates");
  }
  const auto env = factory.make(0);
  const auto allocation = greedy_allocation(*env, cfg.horizon);
  OracleReport report;
  report.counts = allocation.counts;
  report.total_reward = allocation.total_reward;
  report.min_gap = min_gap(*env, cfg.horizon);
  return report;
}

}  // namespace tibandit

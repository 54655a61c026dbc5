// End-to-end acceptance suite. Each test covers one release criterion at a
// pinned tolerance and prints a single PASS/FAIL line.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "tibandit/harness.hpp"

namespace tibandit {
namespace {

namespace fs = std::filesystem;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[ACCEPTANCE] criterion %d (%s): %s  -- %s\n", criterion,
              name.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "tibandit_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// 1. predict_next matches the closed-form full-history weights, and the
//    first-window prediction matches its closed form, within 1e-9 on 1,000
//    random inputs each.
TEST(Acceptance, Criterion1EstimatorEquivalence) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  std::uniform_int_distribution<int> n_draw(2, 500);
  double worst_full = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = n_draw(rng);
    std::vector<double> values;
    values.reserve(n);
    for (int s = 1; s <= n; ++s) values.push_back(value(rng));
    const double sbar = (n + 1) / 2.0;
    double weighted = 0.0;
    for (int s = 1; s <= n; ++s) {
      weighted += (1.0 + 6.0 / (n - 1) * (s - sbar)) * values[s - 1] / n;
    }
    worst_full = std::max(worst_full, std::abs(predict_next(values) - weighted));
  }
  EXPECT_LE(worst_full, 1e-9);

  std::uniform_int_distribution<int> omega_draw(2, 64);
  double worst_window = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int omega = omega_draw(rng);
    const int n = 2 * omega + std::uniform_int_distribution<int>(0, 200)(rng);
    std::vector<double> values;
    values.reserve(n);
    for (int s = 1; s <= n; ++s) values.push_back(value(rng));
    const double sbar = (2.0 * n - 3.0 * omega + 1.0) / 2.0;
    double weighted = 0.0;
    for (int s = n - 2 * omega + 1; s <= n - omega; ++s) {
      const double w =
          1.0 / omega + 6.0 * (s - sbar) * (1.0 + 3.0 * omega) /
                            (static_cast<double>(omega) *
                             (static_cast<double>(omega) * omega - 1.0));
      weighted += w * values[s - 1];
    }
    const auto [w1, w2] = windowed_predictions(values, omega);
    (void)w2;
    worst_window = std::max(worst_window, std::abs(w1 - weighted));
  }
  EXPECT_LE(worst_window, 1e-9);

  std::ostringstream detail;
  detail << "max |full-history diff| = " << worst_full
         << ", max |w1 diff| = " << worst_window << " over 1000 inputs each";
  report(1, "estimator equivalence", !HasFailure(), detail.str());
}

// 2. Prediction-plus-bonus exceeds the true next mean in all but at most a
//    delta fraction of 10,000 seeded trials (linear mean, [0,1]-bounded
//    rewards).
TEST(Acceptance, Criterion2ConcentrationBound) {
  const double slope = 0.001, intercept = 0.2;
  const int trials = 10000;
  std::ostringstream detail;
  bool pass = true;
  for (const double delta : {0.05, 0.01}) {
    for (const int n : {10, 100}) {
      TiUcbParams params;
      params.delta = delta;
      int violations = 0;
      for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng(derive_seed(202, trial, n, delta == 0.05 ? 0 : 1));
        std::uniform_real_distribution<double> noise(-0.1, 0.1);
        std::vector<double> observations;
        observations.reserve(n);
        for (int s = 1; s <= n; ++s) {
          observations.push_back(intercept + slope * s + noise(rng));
        }
        const double bound =
            predict_next(observations) + ucb_exploration_bonus(n, params);
        if (intercept + slope * (n + 1) > bound) ++violations;
      }
      EXPECT_LE(violations, static_cast<int>(delta * trials))
          << "delta=" << delta << " n=" << n;
      pass = pass && violations <= static_cast<int>(delta * trials);
      detail << "delta=" << delta << ",n=" << n << ": " << violations << "/"
             << trials << " violations; ";
    }
  }
  report(2, "concentration bound", pass && !HasFailure(), detail.str());
}

// 3. On a one-arm piecewise-linear environment with a*omega > gamma, the
//    change is detected within omega pulls after the change point in >= 95%
//    of 200 runs, and never earlier in >= 95% of runs.
TEST(Acceptance, Criterion3ChangeDetection) {
  const int omega = 50;
  const std::int64_t horizon = 500;
  const std::int64_t change_point = 300;
  const double delta = 1.0 / static_cast<double>(horizon);
  const double gamma = default_gamma(omega, delta);
  const double slope = 1.2 * gamma / omega;  // a * omega = 1.2 gamma > gamma
  ASSERT_GT(slope * omega, gamma);

  int timely = 0;
  int no_early = 0;
  const int runs = 200;
  for (int run = 0; run < runs; ++run) {
    SyntheticEnvironment env(
        {PiecewiseLinearArm::continuous(slope, 0.0, change_point)}, 0.1);
    TiUcbParams params;
    params.delta = delta;
    params.omega = omega;
    params.gamma = gamma;
    TiUcbPolicy policy(1, params);
    run_episode(env, policy, horizon, derive_seed(303, run));
    const auto detections = policy.detections();
    bool early = false;
    bool within = false;
    for (const auto& d : detections) {
      if (d.step <= change_point) early = true;
    }
    if (!detections.empty()) {
      const auto first = detections.front().step;
      within = first > change_point && first <= change_point + omega;
    }
    if (!early) ++no_early;
    if (within) ++timely;
  }
  EXPECT_GE(timely, static_cast<int>(0.95 * runs));
  EXPECT_GE(no_early, static_cast<int>(0.95 * runs));
  std::ostringstream detail;
  detail << "timely detections " << timely << "/200, no early detections "
         << no_early << "/200 (omega=50, gamma=" << gamma << ")";
  report(3, "change detection behaviour", !HasFailure(), detail.str());
}

// 4. Greedy allocation equals the exhaustive optimum on non-increasing
//    2-arm instances with T <= 8, and the greedy policy's expected regret is
//    identically zero on 50 random environments.
TEST(Acceptance, Criterion4OracleCorrectness) {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    auto data = std::make_shared<TraceData>();
    data->rewards.resize(2);
    for (auto& arm : data->rewards) {
      for (int i = 0; i < 8; ++i) arm.push_back(unit(rng));
      std::sort(arm.begin(), arm.end(), std::greater<double>());
    }
    TraceEnvironment env(data);
    for (std::int64_t horizon = 1; horizon <= 8; ++horizon) {
      double best = -1e300;
      for (std::uint32_t bits = 0; bits < (1u << horizon); ++bits) {
        double total = 0.0;
        std::int64_t pulls[2] = {0, 0};
        for (std::int64_t t = 0; t < horizon; ++t) {
          total += env.mean((bits >> t) & 1u, ++pulls[(bits >> t) & 1u]);
        }
        best = std::max(best, total);
      }
      const auto allocation = greedy_allocation(env, horizon);
      worst_gap = std::max(worst_gap, std::abs(allocation.total_reward - best));
      EXPECT_NEAR(allocation.total_reward, best, 1e-9);
    }
  }

  double worst_regret = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ArmMean> arms;
    const int num_arms = 1 + trial % 4;
    for (int i = 0; i < num_arms; ++i) {
      if (trial % 2 == 0) {
        arms.push_back(ExpArm{0.01 + unit(rng), 0.01 + 0.99 * unit(rng)});
      } else {
        arms.push_back(
            PolyArm{0.01 + 0.99 * unit(rng), 0.01 + 0.99 * unit(rng),
                    0.01 + 0.99 * unit(rng)});
      }
    }
    SyntheticEnvironment env(std::move(arms), 0.05);
    GreedyPolicy policy(env);
    const auto samples = run_episode(env, policy, 300, derive_seed(405, trial));
    std::vector<ArmId> sequence;
    for (const auto& s : samples) sequence.push_back(s.arm);
    const auto trace = expected_regret(env, sequence);
    for (double r : trace.expected) {
      worst_regret = std::max(worst_regret, std::abs(r));
    }
  }
  EXPECT_LE(worst_regret, 1e-9);
  std::ostringstream detail;
  detail << "max |greedy - exhaustive| = " << worst_gap
         << ", max |greedy-policy regret| = " << worst_regret;
  report(4, "greedy benchmark correctness", !HasFailure(), detail.str());
}

ExperimentConfig crossing_config() {
  ExperimentConfig cfg;
  cfg.horizon = 50000;
  cfg.replications = 20;
  cfg.master_seed = 1;
  cfg.environment = {
      {"type", "synthetic"},
      {"sigma", 0.1},
      {"arms",
       {{{"family", "poly"}, {"b", 0.9}, {"c", 0.55}, {"rho", 0.6}},
        {{"family", "exp"}, {"a", 0.0002}, {"c", 1.0}}}}};
  return cfg;
}

// 5. Two-arm crossing environment (fast-converging poly arm, slow-rising exp
//    arm): TI-UCB's mean final regret over 20 runs is strictly below every
//    baseline's.
TEST(Acceptance, Criterion5LowestRegretAtHorizon) {
  auto cfg = crossing_config();
  cfg.policies = {{"ti_ucb", "ti_ucb", json::object()},
                  {"sw_ucb", "sw_ucb", json::object()},
                  {"sw_ts", "sw_ts", json::object()},
                  {"kl_ucb", "kl_ucb", json::object()},
                  {"rexp3", "rexp3", json::object()},
                  {"ser4", "ser4", json::object()}};
  const auto result = run_experiment(cfg);
  const double ti_ucb = result.stats("ti_ucb").mean_final_regret();
  std::ostringstream detail;
  detail << "ti_ucb=" << ti_ucb;
  bool pass = true;
  for (const char* baseline : {"sw_ucb", "sw_ts", "kl_ucb", "rexp3", "ser4"}) {
    const double value = result.stats(baseline).mean_final_regret();
    EXPECT_LT(ti_ucb, value) << baseline;
    pass = pass && ti_ucb < value;
    detail << ", " << baseline << "=" << value;
  }
  report(5, "lowest regret at horizon", pass && !HasFailure(), detail.str());
}

// 6. Piecewise linear-then-constant setting: the per-step regret rate at
//    T = 100k is at most 0.6x the rate at T = 10k over 20 runs.
TEST(Acceptance, Criterion6SublinearRegretTrend) {
  ExperimentConfig cfg;
  cfg.replications = 20;
  cfg.master_seed = 6;
  cfg.environment = {
      {"type", "synthetic"},
      {"sigma", 0.1},
      {"arms",
       {{{"family", "piecewise"}, {"slope", 0.0018}, {"intercept", 0.0}, {"change_point", 500}},
        {{"family", "piecewise"}, {"slope", 0.0015}, {"intercept", 0.0}, {"change_point", 200}}}}};
  cfg.policies = {{"ti_ucb", "ti_ucb", json::object()}};

  cfg.horizon = 10000;
  const double rate_small =
      run_experiment(cfg).stats("ti_ucb").mean_final_regret() / 10000.0;
  cfg.horizon = 100000;
  const double rate_large =
      run_experiment(cfg).stats("ti_ucb").mean_final_regret() / 100000.0;
  EXPECT_GT(rate_small, 0.0);
  EXPECT_LE(rate_large, 0.6 * rate_small);
  std::ostringstream detail;
  detail << "regret rate at 10k = " << rate_small << ", at 100k = " << rate_large
         << " (ratio " << rate_large / rate_small << ", required <= 0.6)";
  report(6, "sublinear regret trend", !HasFailure(), detail.str());
}

// 7. Window sweep over 2^0..2^10 at T = 50k on the fluctuating piecewise
//    environment: regret at both extreme window sizes is at least 1.2x the
//    minimum over the sweep.
TEST(Acceptance, Criterion7WindowSweepShape) {
  ExperimentConfig cfg;
  cfg.horizon = 50000;
  cfg.replications = 20;
  cfg.master_seed = 99;
  cfg.environment = {
      {"type", "synthetic"},
      {"sigma", 0.1},
      {"arms",
       {{{"family", "piecewise"}, {"slope", 0.0018}, {"intercept", 0.0}, {"change_point", 500}},
        {{"family", "piecewise"}, {"slope", 0.0015}, {"intercept", 0.0}, {"change_point", 200}}}}};
  cfg.policies = {{"ti_ucb", "ti_ucb", json::object()}};
  std::vector<int> omegas;
  for (int w = 1; w <= 1024; w *= 2) omegas.push_back(w);
  const auto rows = sweep_window(cfg, omegas);
  ASSERT_EQ(rows.size(), omegas.size());
  double minimum = rows.front().mean_final_regret;
  for (const auto& row : rows) {
    minimum = std::min(minimum, row.mean_final_regret);
  }
  const double left = rows.front().mean_final_regret;
  const double right = rows.back().mean_final_regret;
  EXPECT_GE(left, 1.2 * minimum);
  EXPECT_GE(right, 1.2 * minimum);
  std::ostringstream detail;
  detail << "regret at omega=1: " << left << ", at omega=1024: " << right
         << ", sweep minimum: " << minimum << " (required >= 1.2x minimum)";
  report(7, "window sweep shape", !HasFailure(), detail.str());
}

// 8. Identical configs and seeds give byte-identical CSV outputs across
//    repeated runs and across worker counts 1 and 8.
TEST(Acceptance, Criterion8DeterminismAndScheduleIndependence) {
  ExperimentConfig cfg;
  cfg.horizon = 2000;
  cfg.replications = 8;
  cfg.master_seed = 808;
  cfg.environment = {{"type", "family"},
                     {"kind", "exp"},
                     {"num_arms", 3},
                     {"sigma", 0.1}};
  cfg.policies = {{"ti_ucb", "ti_ucb", json{{"omega", 16}}},
                  {"sw_ts", "sw_ts", json::object()},
                  {"rexp3", "rexp3", json::object()}};

  const auto dir_a = fresh_dir("rerun_a");
  const auto dir_b = fresh_dir("rerun_b");
  const auto dir_c = fresh_dir("workers_8");
  cfg.workers = 1;
  cfg.output_dir = dir_a.string();
  run_experiment(cfg);
  cfg.output_dir = dir_b.string();
  run_experiment(cfg);
  cfg.workers = 8;
  cfg.output_dir = dir_c.string();
  run_experiment(cfg);

  bool pass = true;
  for (const char* file : {"regret_curves.csv", "detections.csv", "plot_data.csv"}) {
    const auto a = slurp(dir_a / file);
    EXPECT_FALSE(a.empty()) << file;
    EXPECT_EQ(a, slurp(dir_b / file)) << file << " across reruns";
    EXPECT_EQ(a, slurp(dir_c / file)) << file << " across worker counts";
    pass = pass && !a.empty() && a == slurp(dir_b / file) && a == slurp(dir_c / file);
  }
  report(8, "determinism and schedule independence", pass && !HasFailure(),
         "regret_curves.csv, detections.csv, plot_data.csv byte-identical "
         "across reruns and worker counts {1, 8}");
}

}  // namespace
}  // namespace tibandit

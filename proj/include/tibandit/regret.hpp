#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tibandit/core.hpp"

namespace tibandit {

class CoverageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GreedyAllocation {
  std::vector<std::int64_t> counts;  // n*_i(T)
  double total_reward = 0.0;
};

// The benchmark pull sequence: at every step take the arm whose next-pull
// mean is largest, ties to the lowest arm id. Myopic by definition, so it
// need not be the global optimum and realized policies can beat it.
namespace detail {

template <typename OnPick>
void simulate_greedy(const Environment& env, std::int64_t horizon, OnPick&& on_pick) {
  const int num_arms = env.num_arms();
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_arms), 0);
  std::vector<double> next_mean(static_cast<std::size_t>(num_arms));
  for (ArmId arm = 0; arm < num_arms; ++arm) {
    next_mean[arm] = env.mean(arm, 1);
  }
  for (std::int64_t t = 1; t <= horizon; ++t) {
    ArmId best = 0;
    for (ArmId arm = 1; arm < num_arms; ++arm) {
      if (next_mean[arm] > next_mean[best]) best = arm;
    }
    const double reward = next_mean[best];
    ++counts[best];
    on_pick(t, best, reward, next_mean);
    next_mean[best] = env.mean(best, counts[best] + 1);
  }
}

}  // namespace detail

inline GreedyAllocation greedy_allocation(const Environment& env,
                                          std::int64_t horizon) {
  if (horizon < 0) throw ConfigError("greedy_allocation: horizon must be >= 0");
  GreedyAllocation out;
  out.counts.assign(static_cast<std::size_t>(env.num_arms()), 0);
  detail::simulate_greedy(env, horizon,
                          [&](std::int64_t, ArmId arm, double reward,
                              const std::vector<double>&) {
                            ++out.counts[static_cast<std::size_t>(arm)];
                            out.total_reward += reward;
                          });
  return out;
}

// Cumulative greedy expected reward after each step; trace[t-1] covers steps 1..t.
inline std::vector<double> greedy_reward_trace(const Environment& env,
                                               std::int64_t horizon) {
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(horizon));
  double cum = 0.0;
  detail::simulate_greedy(env, horizon,
                          [&](std::int64_t, ArmId, double reward,
                              const std::vector<double>&) {
                            cum += reward;
                            trace.push_back(cum);
                          });
  return trace;
}

struct RegretTrace {
  std::vector<double> expected;            // cumulative, one entry per step
  std::vector<std::int64_t> final_counts;  // n_i(T)
};

// Cumulative expected regret of a realized pull sequence against the greedy
// benchmark: regret(t) = greedy(t) - sum_i sum_{s <= n_i(t)} mu_{i,s}.
// Negative values are reported as-is.
inline RegretTrace expected_regret(const Environment& env,
                                   std::span<const ArmId> pull_sequence,
                                   const std::vector<double>& greedy_trace) {
  const auto horizon = static_cast<std::int64_t>(pull_sequence.size());
  if (static_cast<std::int64_t>(greedy_trace.size()) < horizon) {
    throw ConfigError("expected_regret: greedy trace shorter than pull sequence");
  }
  RegretTrace out;
  out.expected.reserve(static_cast<std::size_t>(horizon));
  out.final_counts.assign(static_cast<std::size_t>(env.num_arms()), 0);
  double cum = 0.0;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const ArmId arm = pull_sequence[static_cast<std::size_t>(t - 1)];
    cum += env.mean(arm, ++out.final_counts[static_cast<std::size_t>(arm)]);
    out.expected.push_back(greedy_trace[static_cast<std::size_t>(t - 1)] - cum);
  }
  return out;
}

inline RegretTrace expected_regret(const Environment& env,
                                   std::span<const ArmId> pull_sequence) {
  return expected_regret(
      env, pull_sequence,
      greedy_reward_trace(env, static_cast<std::int64_t>(pull_sequence.size())));
}

// sum_i [ sum_{s <= n*_i} mu_hat_{i,s} - sum_{s <= n_i} mu_hat_{i,s} ] over
// externally supplied per-pull mean estimates (estimates[i][s-1]).
inline double empirical_regret(
    const std::vector<std::vector<double>>& estimates,
    std::span<const std::int64_t> greedy_counts,
    std::span<const std::int64_t> run_counts) {
  if (estimates.size() != greedy_counts.size() ||
      estimates.size() != run_counts.size()) {
    throw ConfigError("empirical_regret: arm count mismatch");
  }
  double value = 0.0;
  for (std::size_t arm = 0; arm < estimates.size(); ++arm) {
    const auto need = std::max(greedy_counts[arm], run_counts[arm]);
    if (need > static_cast<std::int64_t>(estimates[arm].size())) {
      throw CoverageError("empirical_regret: no estimate for arm " +
                          std::to_string(arm) + " at pull " +
                          std::to_string(estimates[arm].size() + 1));
    }
    for (std::int64_t s = 1; s <= greedy_counts[arm]; ++s) {
      value += estimates[arm][static_cast<std::size_t>(s - 1)];
    }
    for (std::int64_t s = 1; s <= run_counts[arm]; ++s) {
      value -= estimates[arm][static_cast<std::size_t>(s - 1)];
    }
  }
  return value;
}

// Minimum gap between the greedily chosen arm's next-pull mean and every
// other arm's next-pull mean, along the greedy trajectory.
inline double min_gap(const Environment& env, std::int64_t horizon) {
  double gap = std::numeric_limits<double>::infinity();
  detail::simulate_greedy(
      env, horizon,
      [&](std::int64_t, ArmId chosen, double reward,
          const std::vector<double>& next_mean) {
        for (std::size_t arm = 0; arm < next_mean.size(); ++arm) {
          if (static_cast<ArmId>(arm) == chosen) continue;
          gap = std::min(gap, reward - next_mean[arm]);
        }
      });
  return gap;
}

// Plays the greedy benchmark against a known-mean environment; its expected
// regret is identically zero by construction.
class GreedyPolicy : public Policy {
 public:
  explicit GreedyPolicy(const Environment& env) : env_(&env) {
    counts_.assign(static_cast<std::size_t>(env.num_arms()), 0);
  }

  int num_arms() const override { return env_->num_arms(); }
  std::string name() const override { return "greedy_oracle"; }

  ArmId select(std::int64_t) override {
    ArmId best = 0;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (ArmId arm = 0; arm < env_->num_arms(); ++arm) {
      const double mean = env_->mean(arm, counts_[static_cast<std::size_t>(arm)] + 1);
      if (mean > best_mean) {
        best_mean = mean;
        best = arm;
      }
    }
    return best;
  }

  void observe(const RewardSample& sample) override {
    ++counts_[static_cast<std::size_t>(sample.arm)];
  }

  void reset() override {
    counts_.assign(static_cast<std::size_t>(env_->num_arms()), 0);
  }

 private:
  const Environment* env_;
  std::vector<std::int64_t> counts_;
};

// Exhaustive-search benchmark for tiny instances; diagnostic companion to
// greedy_allocation (exponential in the horizon).
inline double brute_force_best_reward(const Environment& env, std::int64_t horizon) {
  if (env.num_arms() != 2) {
    throw ConfigError("brute_force_best_reward: implemented for exactly 2 arms");
  }
  if (horizon < 0 || horizon > 24) {
    throw ConfigError("brute_force_best_reward: horizon must be in [0, 24]");
  }
  double best = -std::numeric_limits<double>::infinity();
  const std::uint64_t sequences = 1ULL << horizon;
  for (std::uint64_t bits = 0; bits < sequences; ++bits) {
    double total = 0.0;
    std::int64_t pulls[2] = {0, 0};
    for (std::int64_t t = 0; t < horizon; ++t) {
      const int arm = static_cast<int>((bits >> t) & 1ULL);
      total += env.mean(arm, ++pulls[arm]);
    }
    best = std::max(best, total);
  }
  return best;
}

}  // namespace tibandit

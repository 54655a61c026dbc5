#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tibandit/rng.hpp"

namespace tibandit {

using ArmId = int;

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One interaction step: the policy pulled `arm` for the `pull_index`-th
// time at global step `global_step` and observed `value`.
struct RewardSample {
  ArmId arm = 0;
  std::int64_t pull_index = 0;   // per-arm pull count within the run, 1-based
  std::int64_t global_step = 0;  // 1-based
  double value = 0.0;
};

struct Detection {
  ArmId arm = 0;
  std::int64_t step = 0;  // global step at which the change was flagged
};

// Per-arm observation record kept by trend-tracking policies. Pull indices
// restart at 1 after each detected change.
struct ArmState {
  std::int64_t pulls_since_reset = 0;
  std::vector<double> observations;  // observations[s-1] = value at since-reset pull s
  std::int64_t last_reset_step = 0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual int num_arms() const = 0;
  virtual ArmId select(std::int64_t global_step) = 0;
  virtual void observe(const RewardSample& sample) = 0;
  // Restores the freshly-constructed state, including internal RNG streams.
  virtual void reset() = 0;
  virtual std::string name() const = 0;
  virtual std::vector<Detection> detections() const { return {}; }
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual int num_arms() const = 0;
  // Expected reward of `arm` at its own `pull_index`-th pull. Rested
  // semantics: pure in (arm, pull_index), independent of global time.
  virtual double mean(ArmId arm, std::int64_t pull_index) const = 0;
  virtual double sample(ArmId arm, std::int64_t pull_index, GaussianStream& rng) = 0;
  // Called at the start of every episode; clears per-episode state.
  virtual void begin_episode() {}
};

namespace stream_tag {
inline constexpr std::uint64_t kArmNoise = 0xA1;
inline constexpr std::uint64_t kPolicy = 0xB2;
inline constexpr std::uint64_t kEpisode = 0xC3;
inline constexpr std::uint64_t kEnvParams = 0xD4;
}  // namespace stream_tag

// Runs one episode of `horizon` steps. Reward noise is drawn from per-arm
// substreams keyed by (seed, arm) so that the distribution an arm sees at
// its k-th pull does not depend on how pulls are interleaved.
inline std::vector<RewardSample> run_episode(Environment& env, Policy& policy,
                                             std::int64_t horizon,
                                             std::uint64_t seed) {
  if (horizon < 1) {
    throw ConfigError("run_episode: horizon must be >= 1, got " +
                      std::to_string(horizon));
  }
  if (env.num_arms() != policy.num_arms()) {
    throw ConfigError("run_episode: environment has " +
                      std::to_string(env.num_arms()) + " arms but policy expects " +
                      std::to_string(policy.num_arms()));
  }
  const int num_arms = env.num_arms();
  policy.reset();
  env.begin_episode();

  std::vector<GaussianStream> noise;
  noise.reserve(num_arms);
  for (int arm = 0; arm < num_arms; ++arm) {
    noise.emplace_back(derive_seed(seed, stream_tag::kArmNoise, arm));
  }

  std::vector<std::int64_t> pulls(num_arms, 0);
  std::vector<RewardSample> samples;
  samples.reserve(static_cast<std::size_t>(horizon));
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const ArmId arm = policy.select(t);
    if (arm < 0 || arm >= num_arms) {
      throw ConfigError("run_episode: policy selected arm " + std::to_string(arm) +
                        " outside [0, " + std::to_string(num_arms) + ")");
    }
    ++pulls[arm];
    const double value = env.sample(arm, pulls[arm], noise[arm]);
    const RewardSample sample{arm, pulls[arm], t, value};
    policy.observe(sample);
    samples.push_back(sample);
  }
  return samples;
}

}  // namespace tibandit

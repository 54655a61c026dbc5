#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tibandit/core.hpp"
#include "tibandit/least_squares.hpp"

namespace tibandit {

struct TiUcbParams {
  double delta = 0.01;     // confidence level, in (0, 1)
  int omega = 100;         // detection window length; 1 compares raw neighbouring samples
  double gamma = 0.3;      // detection threshold
  double exploration_scale = 16.0;
};

// Largest detection threshold for which the two-window comparison stays
// conservative at level delta: sqrt((2/w) (14 + 12/|w-1|)^2 ln(2/delta)).
inline double default_gamma(int omega, double delta) {
  if (omega < 2) {
    throw std::invalid_argument("default_gamma: omega must be >= 2, got " +
                                std::to_string(omega));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("default_gamma: delta must lie in (0,1), got " +
                                std::to_string(delta));
  }
  const double k = 14.0 + 12.0 / std::abs(static_cast<double>(omega) - 1.0);
  return std::sqrt(2.0 / omega * k * k * std::log(2.0 / delta));
}

// Non-empty when gamma exceeds the admissible bound for (omega, delta).
inline std::optional<std::string> gamma_admissibility_warning(
    const TiUcbParams& params) {
  if (params.omega < 2) return std::nullopt;  // bound undefined for omega = 1
  const double bound = default_gamma(params.omega, params.delta);
  if (params.gamma > bound) {
    return "gamma " + std::to_string(params.gamma) +
           " exceeds the admissible bound " + std::to_string(bound) +
           " for omega " + std::to_string(params.omega) + ", delta " +
           std::to_string(params.delta);
  }
  return std::nullopt;
}

inline double ucb_exploration_bonus(std::int64_t pulls, const TiUcbParams& params) {
  return params.exploration_scale *
         std::sqrt(2.0 * std::log(1.0 / params.delta) / static_cast<double>(pulls));
}

// Optimistic index: trend-extrapolated next reward plus exploration bonus.
// Unpulled arms score infinity; a single observation is its own prediction.
inline double ucb_index(const ArmState& state, const TiUcbParams& params) {
  if (state.pulls_since_reset == 0) {
    return std::numeric_limits<double>::infinity();
  }
  if (state.pulls_since_reset == 1) {
    return state.observations.front() + ucb_exploration_bonus(1, params);
  }
  return predict_next(state.observations) +
         ucb_exploration_bonus(state.pulls_since_reset, params);
}

// Trend-following UCB policy with two-window change detection. Each arm's
// next reward is extrapolated from a least-squares fit over its pulls since
// the last reset; when the predictions from the two most recent windows
// drift apart by more than gamma/2, the arm's record is reinitialized.
class TiUcbPolicy : public Policy {
 public:
  TiUcbPolicy(int num_arms, TiUcbParams params)
      : num_arms_(num_arms), params_(params) {
    if (num_arms < 1) {
      throw ConfigError("ti-ucb: need at least one arm");
    }
    if (!(params.delta > 0.0 && params.delta < 1.0)) {
      throw ConfigError("ti-ucb: delta must lie in (0,1), got " +
                        std::to_string(params.delta));
    }
    if (params.omega < 1) {
      throw ConfigError("ti-ucb: omega must be >= 1, got " +
                        std::to_string(params.omega));
    }
    if (!(params.gamma > 0.0)) {
      throw ConfigError("ti-ucb: gamma must be > 0, got " +
                        std::to_string(params.gamma));
    }
    if (!(params.exploration_scale > 0.0)) {
      throw ConfigError("ti-ucb: exploration_scale must be > 0, got " +
                        std::to_string(params.exploration_scale));
    }
    if (auto warning = gamma_admissibility_warning(params)) {
      std::cerr << "[ti-ucb] warning: " << *warning << "\n";
    }
    arms_.resize(static_cast<std::size_t>(num_arms));
  }

  int num_arms() const override { return num_arms_; }
  std::string name() const override { return "ti_ucb"; }

  ArmId select(std::int64_t) override {
    ArmId best = 0;
    double best_index = index_of(0);
    for (ArmId arm = 1; arm < num_arms_; ++arm) {
      const double index = index_of(arm);
      if (index > best_index) {  // ties go to the lowest arm id
        best_index = index;
        best = arm;
      }
    }
    return best;
  }

  void observe(const RewardSample& sample) override { observe_and_detect(sample); }

  // Appends the sample and runs the two-window check once the arm has at
  // least 2*omega observations since its last reset. On detection the arm
  // keeps only the triggering sample and its pull count restarts at 1.
  std::optional<Detection> observe_and_detect(const RewardSample& sample) {
    Arm& arm = arms_.at(static_cast<std::size_t>(sample.arm));
    ++arm.state.pulls_since_reset;
    arm.state.observations.push_back(sample.value);
    arm.trend.add(static_cast<double>(arm.state.pulls_since_reset), sample.value);

    if (arm.state.pulls_since_reset >= 2 * static_cast<std::int64_t>(params_.omega)) {
      const auto [from_previous, from_current] = window_pair(arm);
      if (std::abs(from_previous - from_current) > params_.gamma / 2.0) {
        const Detection detection{sample.arm, sample.global_step};
        detections_.push_back(detection);
        arm.state.observations.assign(1, sample.value);
        arm.state.pulls_since_reset = 1;
        arm.state.last_reset_step = sample.global_step;
        arm.trend.reset();
        arm.trend.add(1.0, sample.value);
        return detection;
      }
    }
    return std::nullopt;
  }

  void reset() override {
    arms_.assign(static_cast<std::size_t>(num_arms_), Arm{});
    detections_.clear();
  }

  double index_of(ArmId id) const {
    const Arm& arm = arms_.at(static_cast<std::size_t>(id));
    const std::int64_t pulls = arm.state.pulls_since_reset;
    if (pulls == 0) return std::numeric_limits<double>::infinity();
    if (pulls == 1) {
      return arm.state.observations.front() + ucb_exploration_bonus(1, params_);
    }
    return arm.trend.extrapolate(static_cast<double>(pulls + 1)) +
           ucb_exploration_bonus(pulls, params_);
  }

  const ArmState& arm_state(ArmId id) const {
    return arms_.at(static_cast<std::size_t>(id)).state;
  }

  const TiUcbParams& params() const { return params_; }

  std::vector<Detection> detections() const override { return detections_; }

 private:
  struct Arm {
    ArmState state;
    OnlineLinearFit trend;  // mirrors state.observations
  };

  std::pair<double, double> window_pair(const Arm& arm) const {
    const auto& obs = arm.state.observations;
    if (params_.omega == 1) {
      return {obs[obs.size() - 2], obs[obs.size() - 1]};
    }
    return windowed_predictions(obs, params_.omega);
  }

  int num_arms_;
  TiUcbParams params_;
  std::vector<Arm> arms_;
  std::vector<Detection> detections_;
};

}  // namespace tibandit

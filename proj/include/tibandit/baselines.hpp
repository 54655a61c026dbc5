#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tibandit/core.hpp"

namespace tibandit {

// Bounded-reward policies map observations into [0,1] through a configured
// affine range; values outside the range are clamped.
struct RewardBounds {
  double lo = 0.0;
  double hi = 1.0;

  double normalize(double x) const {
    return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
  }
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- KL-UCB ----------------------------------------------------------------

// Bernoulli KL divergence d(p, q) with the usual 0 log 0 = 0 conventions.
inline double bernoulli_kl(double p, double q) {
  constexpr double eps = 1e-15;
  p = std::clamp(p, 0.0, 1.0);
  q = std::clamp(q, eps, 1.0 - eps);
  double kl = 0.0;
  if (p > 0.0) kl += p * std::log(p / q);
  if (p < 1.0) kl += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return kl;
}

inline double kl_ucb_budget(std::int64_t t, double c) {
  if (t < 2) return 0.0;
  const double lt = std::log(static_cast<double>(t));
  return std::max(0.0, lt + c * std::log(lt));
}

// max{q in [mean, 1] : pulls * d(mean, q) <= ln t + c ln ln t}, by bisection.
inline double kl_ucb_index(double mean, std::int64_t pulls, std::int64_t t,
                           double c) {
  if (pulls == 0) return kInf;
  mean = std::clamp(mean, 0.0, 1.0);
  const double budget = kl_ucb_budget(t, c) / static_cast<double>(pulls);
  double lo = mean;
  double hi = 1.0;
  for (int iter = 0; iter < 32; ++iter) {  // 2^-32 << the 1e-6 target
    const double mid = 0.5 * (lo + hi);
    if (bernoulli_kl(mean, mid) <= budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

class KlUcbPolicy : public Policy {
 public:
  KlUcbPolicy(int num_arms, double c = 3.0, RewardBounds bounds = {})
      : num_arms_(num_arms), c_(c), bounds_(bounds) {
    reset();
  }

  int num_arms() const override { return num_arms_; }
  std::string name() const override { return "kl_ucb"; }

  ArmId select(std::int64_t t) override {
    ArmId best = 0;
    double best_index = -kInf;
    for (ArmId arm = 0; arm < num_arms_; ++arm) {
      const double index =
          pulls_[arm] == 0
              ? kInf
              : kl_ucb_index(sums_[arm] / static_cast<double>(pulls_[arm]),
                             pulls_[arm], t, c_);
      if (index > best_index) {
        best_index = index;
        best = arm;
      }
    }
    return best;
  }

  void observe(const RewardSample& sample) override {
    sums_[sample.arm] += bounds_.normalize(sample.value);
    ++pulls_[sample.arm];
  }

  void reset() override {
    pulls_.assign(static_cast<std::size_t>(num_arms_), 0);
    sums_.assign(static_cast<std::size_t>(num_arms_), 0.0);
  }

 private:
  int num_arms_;
  double c_;
  RewardBounds bounds_;
  std::vector<std::int64_t> pulls_;
  std::vector<double> sums_;
};

// ---- Sliding-window UCB ------------------------------------------------------

inline double sw_ucb_index(double window_mean, std::int64_t window_pulls,
                           std::int64_t t, std::int64_t tau, double xi) {
  if (window_pulls == 0) return kInf;
  const double horizon = static_cast<double>(std::min(t, tau));
  return window_mean +
         std::sqrt(xi * std::log(horizon) / static_cast<double>(window_pulls));
}

class SwUcbPolicy : public Policy {
 public:
  SwUcbPolicy(int num_arms, std::int64_t tau, double xi = 0.6,
              RewardBounds bounds = {})
      : num_arms_(num_arms), tau_(tau), xi_(xi), bounds_(bounds) {
    if (tau < 1) throw ConfigError("sw-ucb: window must be >= 1");
    reset();
  }

  int num_arms() const override { return num_arms_; }
  std::string name() const override { return "sw_ucb"; }

  ArmId select(std::int64_t t) override {
    ArmId best = 0;
    double best_index = -kInf;
    for (ArmId arm = 0; arm < num_arms_; ++arm) {
      const double index =
          window_count_[arm] == 0
              ? kInf
              : sw_ucb_index(window_sum_[arm] /
                                 static_cast<double>(window_count_[arm]),
                             window_count_[arm], t, tau_, xi_);
      if (index > best_index) {
        best_index = index;
        best = arm;
      }
    }
    return best;
  }

  void observe(const RewardSample& sample) override {
    const double r = bounds_.normalize(sample.value);
    window_.emplace_back(sample.arm, r);
    window_sum_[sample.arm] += r;
    ++window_count_[sample.arm];
    if (static_cast<std::int64_t>(window_.size()) > tau_) {
      const auto& [old_arm, old_r] = window_.front();
      window_sum_[old_arm] -= old_r;
      --window_count_[old_arm];
      window_.pop_front();
    }
  }

  void reset() override {
    window_.clear();
    window_sum_.assign(static_cast<std::size_t>(num_arms_), 0.0);
    window_count_.assign(static_cast<std::size_t>(num_arms_), 0);
  }

  std::int64_t windowed_pulls(ArmId arm) const { return window_count_[arm]; }
  double windowed_sum(ArmId arm) const { return window_sum_[arm]; }

 private:
  int num_arms_;
  std::int64_t tau_;
  double xi_;
  RewardBounds bounds_;
  std::deque<std::pair<ArmId, double>> window_;
  std::vector<double> window_sum_;
  std::vector<std::int64_t> window_count_;
};

// ---- Sliding-window Thompson sampling ---------------------------------------

// Beta(1+S, 1+F) posterior over binarized rewards restricted to the last
// tau global steps. Binarization and posterior sampling use separate
// substreams so either can be replayed independently.
class SwTsPolicy : public Policy {
 public:
  SwTsPolicy(int num_arms, std::int64_t tau, std::uint64_t seed,
             RewardBounds bounds = {})
      : num_arms_(num_arms), tau_(tau), seed_(seed), bounds_(bounds) {
    if (tau < 1) throw ConfigError("sw-ts: window must be >= 1");
    reset();
  }

  int num_arms() const override { return num_arms_; }
  std::string name() const override { return "sw_ts"; }

  ArmId select(std::int64_t) override {
    ArmId best = 0;
    double best_draw = -kInf;
    for (ArmId arm = 0; arm < num_arms_; ++arm) {
      const double draw = beta_draw(1.0 + static_cast<double>(successes_[arm]),
                                    1.0 + static_cast<double>(failures_[arm]));
      if (draw > best_draw) {
        best_draw = draw;
        best = arm;
      }
    }
    return best;
  }

  void observe(const RewardSample& sample) override {
    const double r = bounds_.normalize(sample.value);
    const bool success =
        std::uniform_real_distribution<double>(0.0, 1.0)(binarize_rng_) < r;
    window_.emplace_back(sample.arm, success);
    (success ? successes_ : failures_)[sample.arm] += 1;
    if (static_cast<std::int64_t>(window_.size()) > tau_) {
      const auto& [old_arm, old_success] = window_.front();
      (old_success ? successes_ : failures_)[old_arm] -= 1;
      window_.pop_front();
    }
  }

  void reset() override {
    window_.clear();
    successes_.assign(static_cast<std::size_t>(num_arms_), 0);
    failures_.assign(static_cast<std::size_t>(num_arms_), 0);
    sample_rng_.seed(derive_seed(seed_, 0x515));
    binarize_rng_.seed(derive_seed(seed_, 0xB17));
  }

  std::pair<std::int64_t, std::int64_t> windowed_counts(ArmId arm) const {
    return {successes_[arm], failures_[arm]};
  }

 private:
  double beta_draw(double a, double b) {
    const double x = std::gamma_distribution<double>(a, 1.0)(sample_rng_);
    const double y = std::gamma_distribution<double>(b, 1.0)(sample_rng_);
    return x / (x + y);
  }

  int num_arms_;
  std::int64_t tau_;
  std::uint64_t seed_;
  RewardBounds bounds_;
  std::deque<std::pair<ArmId, bool>> window_;
  std::vector<std::int64_t> successes_;
  std::vector<std::int64_t> failures_;
  std::mt19937_64 sample_rng_;
  std::mt19937_64 binarize_rng_;
};

// ---- Sliding-window KL-UCB ---------------------------------------------------

class SwKlUcbPolicy : public Policy {
 public:
  SwKlUcbPolicy(int num_arms, std::int64_t tau, double c = 3.0,
                RewardBounds bounds = {})
      : num_arms_(num_arms), tau_(tau), c_(c), bounds_(bounds) {
    if (tau < 1) throw ConfigError("sw-kl-ucb: window must be >= 1");
    reset();
  }

  int num_arms() const override { return num_arms_; }
  std::string name() const override { return "sw_kl_ucb"; }

  ArmId select(std::int64_t t) override {
    ArmId best = 0;
    double best_index = -kInf;
    for (ArmId arm = 0; arm < num_arms_; ++arm) {
      const double index =
          window_count_[arm] == 0
              ? kInf
              : kl_ucb_index(window_sum_[arm] /
                                 static_cast<double>(window_count_[arm]),
                             window_count_[arm], std::min(t, tau_), c_);
      if (index > best_index) {
        best_index = index;
        best = arm;
      }
    }
    return best;
  }

  void observe(const RewardSample& sample) override {
    const double r = bounds_.normalize(sample.value);
    window_.emplace_back(sample.arm, r);
    window_sum_[sample.arm] += r;
    ++window_count_[sample.arm];
    if (static_cast<std::int64_t>(window_.size()) > tau_) {
      const auto& [old_arm, old_r] = window_.front();
      window_sum_[old_arm] -= old_r;
      --window_count_[old_arm];
      window_.pop_front();
    }
  }

  void reset() override {
    window_.clear();
    window_sum_.assign(static_cast<std::size_t>(num_arms_), 0.0);
    window_count_.assign(static_cast<std::size_t>(num_arms_), 0);
  }

  std::int64_t windowed_pulls(ArmId arm) const { return window_count_[arm]; }
  double windowed_sum(ArmId arm) const { return window_sum_[arm]; }

 private:
  int num_arms_;
  std::int64_t tau_;
  double c_;
  RewardBounds bounds_;
  std::deque<std::pair<ArmId, double>> window_;
  std::vector<double> window_sum_;
  std::vector<std::int64_t> window_count_;
};

// ---- Rexp3 -------------------------------------------------------------------

// Exp3 with exploration mixing `gamma`, restarted from uniform weights every
// `batch` steps.
class Rexp3Policy : public Policy {
 public:
  Rexp3Policy(int num_arms, std::int64_t batch, double gamma,
              std::uint64_t seed, RewardBounds bounds = {})
      : num_arms_(num_arms),
        batch_(batch),
        gamma_(gamma),
        seed_(seed),
        bounds_(bounds) {
    if (batch < 1) throw ConfigError("rexp3: batch must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
      throw ConfigError("rexp3: gamma must lie in [0,1]");
    }
    reset();
  }

  int num_arms() const override { return num_arms_; }
  std::string name() const override { return "rexp3"; }

  ArmId select(std::int64_t) override {
    if (step_in_batch_ == 0) {
      weights_.assign(static_cast<std::size_t>(num_arms_), 1.0);
    }
    step_in_batch_ = (step_in_batch_ + 1) % batch_;
    probs_ = selection_probabilities();
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    for (ArmId arm = 0; arm < num_arms_; ++arm) {
      u -= probs_[arm];
      if (u <= 0.0) {
        last_ = arm;
        return arm;
      }
    }
    last_ = num_arms_ - 1;
    return last_;
  }

  void observe(const RewardSample& sample) override {
    const double r = bounds_.normalize(sample.value);
    const double estimate = r / probs_[sample.arm];
    weights_[sample.arm] *=
        std::exp(gamma_ * estimate / static_cast<double>(num_arms_));
    const double peak = *std::max_element(weights_.begin(), weights_.end());
    if (peak > 1e100) {
      for (double& w : weights_) w /= peak;
    }
  }

  void reset() override {
    weights_.assign(static_cast<std::size_t>(num_arms_), 1.0);
    probs_ = selection_probabilities();
    step_in_batch_ = 0;
    last_ = 0;
    rng_.seed(derive_seed(seed_, 0xE3));
  }

  std::vector<double> selection_probabilities() const {
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    std::vector<double> p(static_cast<std::size_t>(num_arms_));
    for (ArmId arm = 0; arm < num_arms_; ++arm) {
      p[arm] = (1.0 - gamma_) * weights_[arm] / total +
               gamma_ / static_cast<double>(num_arms_);
    }
    return p;
  }

 private:
  int num_arms_;
  std::int64_t batch_;
  double gamma_;
  std::uint64_t seed_;
  RewardBounds bounds_;
  std::vector<double> weights_;
  std::vector<double> probs_;
  std::int64_t step_in_batch_ = 0;
  ArmId last_ = 0;
  std::mt19937_64 rng_;
};

// ---- Ser4 --------------------------------------------------------------------

inline double ser4_radius(std::int64_t pulls, int num_arms, double delta) {
  if (pulls == 0) return kInf;
  const double n = static_cast<double>(pulls);
  return std::sqrt(std::log(4.0 * num_arms * n * n / delta) / (2.0 * n));
}

// Successive elimination with randomized round-robin over surviving arms,
// epsilon-forced exploration, and a full restart with probability phi per
// step.
class Ser4Policy : public Policy {
 public:
  Ser4Policy(int num_arms, double delta, double epsilon, double phi,
             std::uint64_t seed, RewardBounds bounds = {})
      : num_arms_(num_arms),
        delta_(delta),
        epsilon_(epsilon),
        phi_(phi),
        seed_(seed),
        bounds_(bounds) {
    if (!(delta > 0.0 && delta < 1.0)) {
      throw ConfigError("ser4: delta must lie in (0,1)");
    }
    reset();
  }

  int num_arms() const override { return num_arms_; }
  std::string name() const override { return "ser4"; }

  ArmId select(std::int64_t) override {
    auto coin = [&] {
      return std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    };
    if (phi_ > 0.0 && coin() < phi_) {
      restart();
    }
    if (epsilon_ > 0.0 && coin() < epsilon_) {
      return static_cast<ArmId>(
          std::uniform_int_distribution<int>(0, num_arms_ - 1)(rng_));
    }
    if (position_ >= order_.size()) {
      eliminate();
      rebuild_order();
    }
    return order_[position_++];
  }

  void observe(const RewardSample& sample) override {
    sums_[sample.arm] += bounds_.normalize(sample.value);
    ++pulls_[sample.arm];
  }

  void reset() override {
    rng_.seed(derive_seed(seed_, 0x5E4));
    restart();
  }

  const std::vector<bool>& active() const { return active_; }

 private:
  void restart() {
    active_.assign(static_cast<std::size_t>(num_arms_), true);
    pulls_.assign(static_cast<std::size_t>(num_arms_), 0);
    sums_.assign(static_cast<std::size_t>(num_arms_), 0.0);
    rebuild_order();
  }

  void rebuild_order() {
    order_.clear();
    for (ArmId arm = 0; arm < num_arms_; ++arm) {
      if (active_[arm]) order_.push_back(arm);
    }
    std::shuffle(order_.begin(), order_.end(), rng_);
    position_ = 0;
  }

  void eliminate() {
    double best_mean = -kInf;
    ArmId best = -1;
    for (ArmId arm = 0; arm < num_arms_; ++arm) {
      if (!active_[arm] || pulls_[arm] == 0) continue;
      const double mean = sums_[arm] / static_cast<double>(pulls_[arm]);
      if (mean > best_mean) {
        best_mean = mean;
        best = arm;
      }
    }
    if (best < 0) return;
    for (ArmId arm = 0; arm < num_arms_; ++arm) {
      if (!active_[arm] || arm == best || pulls_[arm] == 0) continue;
      const double mean = sums_[arm] / static_cast<double>(pulls_[arm]);
      const double margin = ser4_radius(pulls_[best], num_arms_, delta_) +
                            ser4_radius(pulls_[arm], num_arms_, delta_);
      if (best_mean - mean > margin) {
        active_[arm] = false;
      }
    }
  }

  int num_arms_;
  double delta_;
  double epsilon_;
  double phi_;
  std::uint64_t seed_;
  RewardBounds bounds_;
  std::vector<bool> active_;
  std::vector<std::int64_t> pulls_;
  std::vector<double> sums_;
  std::vector<ArmId> order_;
  std::size_t position_ = 0;
  std::mt19937_64 rng_;
};

// ---- Recommended parameterizations -------------------------------------------

// Ceiling that forgives sub-1e-9 floating error above exact integers.
inline std::int64_t ceil_count(double value) {
  return static_cast<std::int64_t>(std::ceil(value - 1e-9));
}

inline std::int64_t default_sw_ucb_tau(std::int64_t horizon) {
  const double t = static_cast<double>(horizon);
  return ceil_count(4.0 * std::sqrt(t * std::log(t)));
}

inline std::int64_t default_sw_ts_tau(std::int64_t horizon) {
  return ceil_count(std::sqrt(static_cast<double>(horizon)));
}

inline std::int64_t default_sw_kl_ucb_tau(std::int64_t horizon) {
  return ceil_count(std::pow(static_cast<double>(horizon), 0.8));
}

// Batch length with variation budget V_T = K.
inline std::int64_t default_rexp3_batch(int num_arms, std::int64_t horizon) {
  const double k = static_cast<double>(num_arms);
  const double per_budget = static_cast<double>(horizon) / k;
  return std::max<std::int64_t>(
      1, ceil_count(std::cbrt(k * std::log(k)) * std::pow(per_budget, 2.0 / 3.0)));
}

inline double default_rexp3_gamma(int num_arms, std::int64_t batch) {
  const double k = static_cast<double>(num_arms);
  const double value = std::sqrt(k * std::log(k) / ((std::numbers::e - 1.0) *
                                                    static_cast<double>(batch)));
  return std::min(1.0, value);
}

// Restart rate with the number of best-arm switches defaulted to K.
inline double default_ser4_phi(int num_arms, std::int64_t horizon,
                               double num_switches) {
  const double k = static_cast<double>(num_arms);
  const double t = static_cast<double>(horizon);
  return std::sqrt(num_switches / (t * k) * std::log(k * t));
}

}  // namespace tibandit

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tibandit/core.hpp"

namespace tibandit {

class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class TraceExhausted : public std::out_of_range {
  using std::out_of_range::out_of_range;
};

// ---- Mean functions -----------------------------------------------------------

// c (1 - e^{-a n}): rapid increase, converging to c.
struct ExpArm {
  double a = 0.5;
  double c = 1.0;

  double mean(std::int64_t n) const {
    return c * (1.0 - std::exp(-a * static_cast<double>(n)));
  }
};

// c (1 - b (n + b^{1/rho})^{-rho}): slower increase, converging to c.
struct PolyArm {
  double b = 1.0;
  double c = 1.0;
  double rho = 0.5;

  double mean(std::int64_t n) const {
    if (n == 0) return 0.0;
    if (b == 0.0) return c;
    return c * (1.0 - b * std::pow(static_cast<double>(n) + std::pow(b, 1.0 / rho),
                                   -rho));
  }
};

// Linear growth a n + b until the change point, then a constant plateau.
struct PiecewiseLinearArm {
  double slope = 0.0;
  double intercept = 0.0;
  double plateau = 0.0;
  std::int64_t change_point = 1;

  static PiecewiseLinearArm continuous(double slope, double intercept,
                                       std::int64_t change_point) {
    return {slope, intercept,
            slope * static_cast<double>(change_point) + intercept, change_point};
  }

  double mean(std::int64_t n) const {
    return n < change_point ? slope * static_cast<double>(n) + intercept
                            : plateau;
  }
};

using ArmMean = std::variant<ExpArm, PolyArm, PiecewiseLinearArm>;

inline double arm_mean(const ArmMean& arm, std::int64_t n) {
  return std::visit([n](const auto& a) { return a.mean(n); }, arm);
}

// ---- Synthetic environment ------------------------------------------------------

// Closed-form arms observed through additive Gaussian noise. An optional
// clamp range truncates samples for experiments feeding bounded-reward
// policies.
class SyntheticEnvironment : public Environment {
 public:
  SyntheticEnvironment(std::vector<ArmMean> arms, double sigma,
                       std::optional<std::pair<double, double>> clamp = {})
      : arms_(std::move(arms)), sigma_(sigma), clamp_(clamp) {
    if (arms_.empty()) throw ConfigError("environment needs at least one arm");
    if (sigma_ < 0.0) throw ConfigError("noise sigma must be >= 0");
  }

  int num_arms() const override { return static_cast<int>(arms_.size()); }

  double mean(ArmId arm, std::int64_t pull_index) const override {
    return arm_mean(arms_.at(static_cast<std::size_t>(arm)), pull_index);
  }

  double sample(ArmId arm, std::int64_t pull_index, GaussianStream& rng) override {
    double value = mean(arm, pull_index) + sigma_ * rng.normal();
    if (clamp_) value = std::clamp(value, clamp_->first, clamp_->second);
    return value;
  }

  const std::vector<ArmMean>& arms() const { return arms_; }
  double sigma() const { return sigma_; }

 private:
  std::vector<ArmMean> arms_;
  double sigma_;
  std::optional<std::pair<double, double>> clamp_;
};

// ---- Random families ------------------------------------------------------------

enum class Family { kExp, kPoly };

// Half-open draw ranges (lo, hi]; the defaults cover the unit interval.
struct FamilyRanges {
  std::pair<double, double> a{0.0, 1.0};
  std::pair<double, double> c{0.0, 1.0};
  std::pair<double, double> b{0.0, 1.0};
  std::pair<double, double> rho{0.0, 1.0};
};

// K arm parameter draws, each from its own substream of `seed`.
inline std::vector<ArmMean> sample_family(Family family, int num_arms,
                                          std::uint64_t seed,
                                          const FamilyRanges& ranges = {}) {
  if (num_arms < 1) throw ConfigError("sample_family: need at least one arm");
  auto draw = [](GaussianStream& rng, const std::pair<double, double>& range) {
    const double u = 1.0 - rng.uniform();  // (0, 1]
    return range.first + (range.second - range.first) * u;
  };
  std::vector<ArmMean> arms;
  arms.reserve(static_cast<std::size_t>(num_arms));
  for (int i = 0; i < num_arms; ++i) {
    GaussianStream rng(derive_seed(seed, stream_tag::kEnvParams, i));
    if (family == Family::kExp) {
      ExpArm arm;
      arm.a = draw(rng, ranges.a);
      arm.c = draw(rng, ranges.c);
      arms.emplace_back(arm);
    } else {
      PolyArm arm;
      arm.b = draw(rng, ranges.b);
      arm.c = draw(rng, ranges.c);
      arm.rho = draw(rng, ranges.rho);
      arms.emplace_back(arm);
    }
  }
  return arms;
}

// ---- Trace replay ---------------------------------------------------------------

struct TraceData {
  std::vector<std::vector<double>> rewards;  // rewards[arm][pull-1]

  int num_arms() const { return static_cast<int>(rewards.size()); }

  std::vector<std::int64_t> lengths() const {
    std::vector<std::int64_t> out;
    out.reserve(rewards.size());
    for (const auto& arm : rewards) {
      out.push_back(static_cast<std::int64_t>(arm.size()));
    }
    return out;
  }
};

// Reads the trace CSV format: header `arm,pull_index,reward`, one row per
// observation. Rows may appear in any order; each arm's pull indices must
// form 1..len without gaps. Arms may have different lengths.
inline TraceData load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "arm,pull_index,reward") {
    throw ParseError(path + ":1: expected header 'arm,pull_index,reward', got '" +
                     line + "'");
  }

  std::vector<std::vector<std::pair<std::int64_t, double>>> per_arm;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = path + ":" + std::to_string(line_no);
    std::istringstream row(line);
    std::string field;
    long long arm_raw = 0;
    long long pull_raw = 0;
    double reward = 0.0;
    try {
      if (!std::getline(row, field, ',')) throw std::invalid_argument("arm");
      arm_raw = std::stoll(field);
      if (!std::getline(row, field, ',')) throw std::invalid_argument("pull");
      pull_raw = std::stoll(field);
      if (!std::getline(row, field, ',')) throw std::invalid_argument("reward");
      reward = std::stod(field);
    } catch (const std::exception&) {
      throw ParseError(where + ": malformed row '" + line + "'");
    }
    if (arm_raw < 0) throw ParseError(where + ": negative arm index");
    if (pull_raw < 1) throw ParseError(where + ": pull_index must be >= 1");
    if (static_cast<std::size_t>(arm_raw) >= per_arm.size()) {
      per_arm.resize(static_cast<std::size_t>(arm_raw) + 1);
    }
    per_arm[static_cast<std::size_t>(arm_raw)].emplace_back(pull_raw, reward);
  }

  TraceData data;
  data.rewards.resize(per_arm.size());
  for (std::size_t arm = 0; arm < per_arm.size(); ++arm) {
    auto& entries = per_arm[arm];
    std::sort(entries.begin(), entries.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    auto& values = data.rewards[arm];
    values.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].first != static_cast<std::int64_t>(i + 1)) {
        throw ParseError(path + ": arm " + std::to_string(arm) +
                         " is missing pull_index " + std::to_string(i + 1));
      }
      values.push_back(entries[i].second);
    }
  }
  return data;
}

inline void save_trace(const TraceData& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) throw ParseError("cannot write trace file: " + path);
  out << "arm,pull_index,reward\n";
  char buffer[64];
  for (std::size_t arm = 0; arm < data.rewards.size(); ++arm) {
    const auto& values = data.rewards[arm];
    for (std::size_t pull = 0; pull < values.size(); ++pull) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", values[pull]);
      out << arm << ',' << (pull + 1) << ',' << buffer << '\n';
    }
  }
}

// Replays recorded per-arm reward sequences; deterministic, ignores noise.
class TraceEnvironment : public Environment {
 public:
  explicit TraceEnvironment(std::shared_ptr<const TraceData> data)
      : data_(std::move(data)) {
    if (!data_ || data_->rewards.empty()) {
      throw ConfigError("trace environment needs at least one arm");
    }
  }

  int num_arms() const override { return data_->num_arms(); }

  double mean(ArmId arm, std::int64_t pull_index) const override {
    return value_at(arm, pull_index);
  }

  double sample(ArmId arm, std::int64_t pull_index, GaussianStream&) override {
    return value_at(arm, pull_index);
  }

  const TraceData& data() const { return *data_; }

 private:
  double value_at(ArmId arm, std::int64_t pull_index) const {
    const auto& values = data_->rewards.at(static_cast<std::size_t>(arm));
    if (pull_index < 1 || pull_index > static_cast<std::int64_t>(values.size())) {
      throw TraceExhausted("trace for arm " + std::to_string(arm) +
                           " has " + std::to_string(values.size()) +
                           " pulls, requested pull " + std::to_string(pull_index));
    }
    return values[static_cast<std::size_t>(pull_index - 1)];
  }

  std::shared_ptr<const TraceData> data_;
};

// ---- Cost-adjusted wrapper --------------------------------------------------------

// Deducts a cumulative per-pull training charge eta from the wrapped
// environment's rewards. The charge for an arm stops accruing permanently
// once `stall_window` consecutive pulls fail to improve on the best score
// seen so far by more than `stall_threshold`.
class CostAdjustedEnvironment : public Environment {
 public:
  CostAdjustedEnvironment(std::shared_ptr<Environment> inner,
                          std::vector<double> cost_per_pull,
                          std::int64_t stall_window = 100,
                          double stall_threshold = 0.1)
      : inner_(std::move(inner)),
        cost_(std::move(cost_per_pull)),
        stall_window_(stall_window),
        stall_threshold_(stall_threshold) {
    if (!inner_) throw ConfigError("cost wrapper needs an inner environment");
    if (static_cast<int>(cost_.size()) != inner_->num_arms()) {
      throw ConfigError("cost wrapper: need one cost per arm");
    }
    for (double m : cost_) {
      if (m < 0.0) throw ConfigError("cost wrapper: costs must be >= 0");
    }
    if (stall_window_ < 1) throw ConfigError("cost wrapper: stall window must be >= 1");
    begin_episode();
    mean_cache_.resize(cost_.size());
  }

  CostAdjustedEnvironment(std::shared_ptr<Environment> inner, double cost_per_pull,
                          std::int64_t stall_window = 100,
                          double stall_threshold = 0.1)
      : CostAdjustedEnvironment(
            inner,
            std::vector<double>(static_cast<std::size_t>(inner->num_arms()),
                                cost_per_pull),
            stall_window, stall_threshold) {}

  int num_arms() const override { return inner_->num_arms(); }

  void begin_episode() override {
    inner_->begin_episode();
    const auto k = static_cast<std::size_t>(inner_->num_arms());
    episode_.assign(k, ChargeState{});
  }

  double sample(ArmId arm, std::int64_t pull_index, GaussianStream& rng) override {
    const double raw = inner_->sample(arm, pull_index, rng);
    auto& state = episode_[static_cast<std::size_t>(arm)];
    const double value = raw - state.eta;
    advance(state, raw, cost_[static_cast<std::size_t>(arm)]);
    return value;
  }

  // Expected reward under the deterministic charge path obtained by running
  // the stall rule on the inner means themselves.
  double mean(ArmId arm, std::int64_t pull_index) const override {
    auto& cache = mean_cache_[static_cast<std::size_t>(arm)];
    while (static_cast<std::int64_t>(cache.eta_before.size()) < pull_index) {
      const auto pull = static_cast<std::int64_t>(cache.eta_before.size()) + 1;
      cache.eta_before.push_back(cache.charge.eta);
      advance(cache.charge, inner_->mean(arm, pull),
              cost_[static_cast<std::size_t>(arm)]);
    }
    return inner_->mean(arm, pull_index) -
           cache.eta_before[static_cast<std::size_t>(pull_index - 1)];
  }

  double episode_eta(ArmId arm) const {
    return episode_[static_cast<std::size_t>(arm)].eta;
  }

  bool charging(ArmId arm) const {
    return episode_[static_cast<std::size_t>(arm)].active;
  }

 private:
  struct ChargeState {
    double eta = 0.0;
    bool active = true;
    double best = -std::numeric_limits<double>::infinity();
    std::int64_t stalled = 0;
  };

  void advance(ChargeState& state, double score, double cost) const {
    if (!state.active) return;
    state.eta += cost;
    if (score > state.best + stall_threshold_) {
      state.best = score;
      state.stalled = 0;
    } else {
      state.best = std::max(state.best, score);
      if (++state.stalled >= stall_window_) state.active = false;
    }
  }

  struct MeanCache {
    std::vector<double> eta_before;  // eta in effect at pull p = eta_before[p-1]
    ChargeState charge;
  };

  std::shared_ptr<Environment> inner_;
  std::vector<double> cost_;
  std::int64_t stall_window_;
  double stall_threshold_;
  std::vector<ChargeState> episode_;
  mutable std::vector<MeanCache> mean_cache_;
};

}  // namespace tibandit

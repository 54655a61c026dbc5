#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tibandit {

class DegenerateFit : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class InsufficientData : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class InvalidWindow : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::int64_t n = 0;

  double at(double x) const { return slope * x + intercept; }
};

// Simple linear regression accumulator using centered (Welford-style)
// updates; stays accurate for abscissae up to millions of pulls.
class OnlineLinearFit {
 public:
  void add(double x, double y) {
    ++n_;
    const double dx = x - mean_x_;
    mean_x_ += dx / static_cast<double>(n_);
    sxx_ += dx * (x - mean_x_);
    const double dy = y - mean_y_;
    mean_y_ += dy / static_cast<double>(n_);
    sxy_ += dx * (y - mean_y_);
  }

  std::int64_t size() const { return n_; }

  bool degenerate() const { return n_ < 2 || !(sxx_ > 0.0); }

  LinearFit fit() const {
    require_regular();
    const double slope = sxy_ / sxx_;
    return {slope, mean_y_ - slope * mean_x_, n_};
  }

  // Fitted value at x, evaluated in centered form.
  double extrapolate(double x) const {
    require_regular();
    return mean_y_ + (sxy_ / sxx_) * (x - mean_x_);
  }

  void reset() { *this = OnlineLinearFit{}; }

 private:
  void require_regular() const {
    if (degenerate()) {
      throw DegenerateFit("linear fit needs >= 2 points with distinct abscissae");
    }
  }

  std::int64_t n_ = 0;
  double mean_x_ = 0.0;
  double mean_y_ = 0.0;
  double sxx_ = 0.0;
  double sxy_ = 0.0;
};

using PullValue = std::pair<std::int64_t, double>;  // (pull index, observed value)

inline LinearFit fit(std::span<const PullValue> points) {
  OnlineLinearFit acc;
  for (const auto& [s, x] : points) {
    acc.add(static_cast<double>(s), x);
  }
  return acc.fit();
}

// Least-squares extrapolation to pull n+1 from values observed at pulls
// 1..n (values[s-1] is the s-th observation).
inline double predict_next(std::span<const double> values) {
  const auto n = static_cast<std::int64_t>(values.size());
  if (n < 2) {
    throw DegenerateFit("predict_next needs at least 2 observations, got " +
                        std::to_string(n));
  }
  OnlineLinearFit acc;
  for (std::int64_t s = 1; s <= n; ++s) {
    acc.add(static_cast<double>(s), values[static_cast<std::size_t>(s - 1)]);
  }
  return acc.extrapolate(static_cast<double>(n + 1));
}

// Independent extrapolations to pull n+1 from the two most recent
// length-omega windows: pulls [n-2w+1, n-w] and [n-w+1, n].
inline std::pair<double, double> windowed_predictions(
    std::span<const double> values, int omega) {
  if (omega < 2) {
    throw InvalidWindow("window length must be >= 2, got " +
                        std::to_string(omega));
  }
  const auto n = static_cast<std::int64_t>(values.size());
  if (n < 2 * static_cast<std::int64_t>(omega)) {
    throw InsufficientData("two windows of length " + std::to_string(omega) +
                           " need " + std::to_string(2 * omega) +
                           " observations, got " + std::to_string(n));
  }
  OnlineLinearFit first;
  OnlineLinearFit second;
  for (std::int64_t s = n - 2 * omega + 1; s <= n - omega; ++s) {
    first.add(static_cast<double>(s), values[static_cast<std::size_t>(s - 1)]);
  }
  for (std::int64_t s = n - omega + 1; s <= n; ++s) {
    second.add(static_cast<double>(s), values[static_cast<std::size_t>(s - 1)]);
  }
  const double target = static_cast<double>(n + 1);
  return {first.extrapolate(target), second.extrapolate(target)};
}

}  // namespace tibandit

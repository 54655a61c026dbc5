#include "tibandit/least_squares.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace tibandit {
namespace {

// Textbook normal-equations solver, kept independent of the library's
// centered accumulator on purpose.
struct NormalEquationsFit {
  double slope;
  double intercept;
};

NormalEquationsFit normal_equations(const std::vector<std::pair<double, double>>& pts) {
  double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    n += 1.0;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / denom;
  return {slope, (sy - slope * sx) / n};
}

TEST(Fit, ExactLine) {
  const std::vector<PullValue> pts = {{1, 1.0}, {2, 2.0}, {3, 3.0}};
  const LinearFit f = fit(pts);
  EXPECT_NEAR(f.slope, 1.0, 1e-12);
  EXPECT_NEAR(f.intercept, 0.0, 1e-12);
  EXPECT_EQ(f.n, 3);
}

TEST(Fit, ConstantData) {
  const double c = 0.7;
  const std::vector<PullValue> pts = {{1, c}, {2, c}, {3, c}};
  const LinearFit f = fit(pts);
  EXPECT_NEAR(f.slope, 0.0, 1e-12);
  EXPECT_NEAR(f.intercept, c, 1e-12);
}

TEST(Fit, CollinearResidualsAreZero) {
  const std::vector<PullValue> pts = {{2, 1.3}, {5, 2.5}, {9, 4.1}, {14, 6.1}};
  const LinearFit f = fit(pts);
  for (const auto& [s, x] : pts) {
    EXPECT_NEAR(f.at(static_cast<double>(s)), x, 1e-12);
  }
}

TEST(Fit, MatchesNormalEquationsOnNoisyTrend) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> noise(-0.05, 0.05);
  std::vector<PullValue> pts;
  std::vector<std::pair<double, double>> raw;
  for (int s = 1; s <= 50; ++s) {
    const double v = 0.02 * s + 0.1 + noise(rng);
    pts.emplace_back(s, v);
    raw.emplace_back(static_cast<double>(s), v);
  }
  const LinearFit f = fit(pts);
  const NormalEquationsFit oracle = normal_equations(raw);
  EXPECT_NEAR(f.slope, oracle.slope, 1e-9);
  EXPECT_NEAR(f.intercept, oracle.intercept, 1e-9);
}

TEST(Fit, DegenerateInputs) {
  const std::vector<PullValue> one = {{1, 2.0}};
  EXPECT_THROW(fit(one), DegenerateFit);
  const std::vector<PullValue> same_index = {{3, 1.0}, {3, 2.0}, {3, 3.0}};
  EXPECT_THROW(fit(same_index), DegenerateFit);
}

TEST(PredictNext, ExactLineExtrapolates) {
  const double a = 0.37, b = -1.2;
  std::vector<double> values;
  for (int s = 1; s <= 12; ++s) values.push_back(a * s + b);
  EXPECT_NEAR(predict_next(values), a * 13 + b, 1e-10);
}

TEST(PredictNext, UnitSlopeLine) {
  const std::vector<double> values = {1.0, 2.0, 3.0};
  EXPECT_NEAR(predict_next(values), 4.0, 1e-12);
}

TEST(PredictNext, FourPointCaseMatchesOracle) {
  // Normal equations on (1,0.1),(2,0.4),(3,0.2),(4,0.5): slope 0.1,
  // intercept 0.05, so the value at pull 5 is 0.55.
  const std::vector<double> values = {0.1, 0.4, 0.2, 0.5};
  EXPECT_NEAR(predict_next(values), 0.55, 1e-12);
}

TEST(PredictNext, TooFewPoints) {
  const std::vector<double> one = {0.5};
  EXPECT_THROW(predict_next(one), DegenerateFit);
}

// Closed-form prediction weights (1/n)[1 + 6(s - sbar)/(n - 1)] over pulls
// 1..n reproduce the least-squares extrapolation.
TEST(PredictNext, MatchesClosedFormWeights) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  for (int n = 2; n <= 500; n += (n < 20 ? 1 : 37)) {
    std::vector<double> values;
    for (int s = 1; s <= n; ++s) values.push_back(value(rng));
    const double sbar = (n + 1) / 2.0;
    double weighted = 0.0;
    for (int s = 1; s <= n; ++s) {
      weighted += (1.0 + 6.0 / (n - 1) * (s - sbar)) * values[s - 1];
    }
    weighted /= n;
    EXPECT_NEAR(predict_next(values), weighted, 1e-9) << "n=" << n;
  }
}

TEST(WindowedPredictions, SingleExactLine) {
  const std::vector<double> values = {1.0, 2.0, 3.0, 4.0};
  const auto [w1, w2] = windowed_predictions(values, 2);
  EXPECT_NEAR(w1, 5.0, 1e-12);
  EXPECT_NEAR(w2, 5.0, 1e-12);
}

TEST(WindowedPredictions, KinkedSeries) {
  // First window continues the line through (1,1),(2,2); the second is flat.
  const std::vector<double> values = {1.0, 2.0, 2.0, 2.0};
  const auto [w1, w2] = windowed_predictions(values, 2);
  EXPECT_NEAR(w1, 5.0, 1e-12);
  EXPECT_NEAR(w2, 2.0, 1e-12);
}

TEST(WindowedPredictions, MatchesPerWindowOracle) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> value(-1.0, 2.0);
  const int omega = 3;
  for (int n : {6, 9, 14, 40}) {
    std::vector<double> values;
    for (int s = 1; s <= n; ++s) values.push_back(value(rng));
    std::vector<std::pair<double, double>> first, second;
    for (int s = n - 2 * omega + 1; s <= n - omega; ++s) {
      first.emplace_back(s, values[s - 1]);
    }
    for (int s = n - omega + 1; s <= n; ++s) {
      second.emplace_back(s, values[s - 1]);
    }
    const auto o1 = normal_equations(first);
    const auto o2 = normal_equations(second);
    const auto [w1, w2] = windowed_predictions(values, omega);
    EXPECT_NEAR(w1, o1.slope * (n + 1) + o1.intercept, 1e-9);
    EXPECT_NEAR(w2, o2.slope * (n + 1) + o2.intercept, 1e-9);
  }
}

// First-window closed form: weights 1/w + 6(s - sbar)(1 + 3w)/(w (w^2 - 1)).
TEST(WindowedPredictions, FirstWindowClosedForm) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  for (int omega = 2; omega <= 64; omega *= 2) {
    const int n = 2 * omega + 5;
    std::vector<double> values;
    for (int s = 1; s <= n; ++s) values.push_back(value(rng));
    const double sbar = (2.0 * n - 3.0 * omega + 1.0) / 2.0;
    double weighted = 0.0;
    for (int s = n - 2 * omega + 1; s <= n - omega; ++s) {
      const double w = 1.0 / omega + 6.0 * (s - sbar) * (1.0 + 3.0 * omega) /
                                        (static_cast<double>(omega) *
                                         (static_cast<double>(omega) * omega - 1.0));
      weighted += w * values[s - 1];
    }
    const auto [w1, _] = windowed_predictions(values, omega);
    EXPECT_NEAR(w1, weighted, 1e-9) << "omega=" << omega;
  }
}

TEST(WindowedPredictions, Errors) {
  const std::vector<double> values = {1.0, 2.0, 3.0};
  EXPECT_THROW(windowed_predictions(values, 2), InsufficientData);
  const std::vector<double> four = {1.0, 2.0, 3.0, 4.0};
  EXPECT_THROW(windowed_predictions(four, 1), InvalidWindow);
}

TEST(Predictions, ShiftInvariance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  const double shift = 3.25;
  std::vector<double> values, shifted;
  for (int s = 1; s <= 24; ++s) {
    const double v = value(rng);
    values.push_back(v);
    shifted.push_back(v + shift);
  }
  EXPECT_NEAR(predict_next(shifted), predict_next(values) + shift, 1e-9);
  const auto [w1a, w2a] = windowed_predictions(values, 4);
  const auto [w1b, w2b] = windowed_predictions(shifted, 4);
  EXPECT_NEAR(w1b, w1a + shift, 1e-9);
  EXPECT_NEAR(w2b, w2a + shift, 1e-9);
}

TEST(OnlineLinearFit, IncrementalMatchesBatch) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  OnlineLinearFit acc;
  std::vector<double> values;
  for (int s = 1; s <= 200; ++s) {
    const double v = value(rng);
    values.push_back(v);
    acc.add(static_cast<double>(s), v);
    if (s >= 2) {
      EXPECT_DOUBLE_EQ(acc.extrapolate(s + 1), predict_next(values));
    }
  }
}

}  // namespace
}  // namespace tibandit

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "tieinfer/errors.hpp"
#include "tieinfer/learn/logistic.hpp"
#include "tieinfer/rng.hpp"

using namespace tieinfer;
using namespace tieinfer::learn;

namespace {

struct Data {
  DenseMatrix x;
  std::vector<std::uint8_t> y;
};

Data overlapping(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Data t{DenseMatrix(n, d), std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < d; ++j) {
      t.x(i, j) = rng.uniform(-2, 2) * (1.0 + j);
      s += (j % 2 ? -0.4 : 0.7) * t.x(i, j) / (1.0 + j);
    }
    t.y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-s));
  }
  return t;
}

}  // namespace

TEST(Logistic, OneDimensionalSign) {
  DenseMatrix x(4, 1, {1, 1, -1, -1});
  const std::vector<std::uint8_t> y{1, 1, 0, 0};
  const auto m = LogisticModel::train(x, y, {});
  EXPECT_GT(m.weights()[0], 0);
  EXPECT_GT(m.predict_proba(std::vector<double>{1.0}), 0.5);
}

TEST(Logistic, ConstantColumnGetsZeroWeight) {
  Data t = overlapping(200, 3, 1);
  for (std::size_t i = 0; i < 200; ++i) t.x(i, 1) = 3.5;
  const auto m = LogisticModel::train(t.x, t.y, {});
  EXPECT_EQ(m.weights()[1], 0.0);
  EXPECT_EQ(m.standardizer().scale[1], 0.0);
}

TEST(Logistic, GradientMatchesFiniteDifference) {
  const Data t = overlapping(150, 4, 2);
  const auto m = LogisticModel::train(t.x, t.y, {});
  EXPECT_TRUE(m.converged());
  const DenseMatrix z = m.standardizer().apply(t.x);
  const double l2 = m.config().l2;
  // Probe at the optimum and at a perturbed point, where the gradient is large.
  for (double shift : {0.0, 0.3}) {
    std::vector<double> w = m.weights();
    for (auto& v : w) v += shift;
    const double b = m.intercept() - shift;
    std::vector<double> g(w.size());
    const double gb = logistic_gradient(z, t.y, w, b, l2, g);
    const double h = 1e-6;
    for (std::size_t j = 0; j <= w.size(); ++j) {
      std::vector<double> wp = w, wm = w;
      double bp = b, bm = b;
      if (j < w.size()) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd = (logistic_objective(z, t.y, wp, bp, l2) -
                         logistic_objective(z, t.y, wm, bm, l2)) / (2 * h);
      const double an = j < w.size() ? g[j] : gb;
      EXPECT_NEAR(an, fd, 1e-5 * std::max(1.0, std::abs(fd)) + 1e-9) << j << " shift " << shift;
    }
  }
}

TEST(Logistic, LossNonIncreasing) {
  const Data t = overlapping(300, 5, 3);
  LogisticConfig cfg;
  cfg.record_loss = true;
  const auto m = LogisticModel::train(t.x, t.y, cfg);
  const auto& loss = m.loss_history();
  ASSERT_GT(loss.size(), 2u);
  for (std::size_t i = 1; i < loss.size(); ++i) EXPECT_LE(loss[i], loss[i - 1] + 1e-15) << i;
  EXPECT_LT(m.gradient_norm(), cfg.tol);
}

TEST(Logistic, NonConvergenceIsReportedNotThrown) {
  const Data t = overlapping(300, 5, 4);
  LogisticConfig cfg;
  cfg.max_iter = 3;
  const auto m = LogisticModel::train(t.x, t.y, cfg);
  EXPECT_FALSE(m.converged());
  EXPECT_EQ(m.iterations(), 3);
}

TEST(Logistic, SingleClassThrows) {
  DenseMatrix x(2, 1, {0, 1});
  EXPECT_THROW(LogisticModel::train(x, std::vector<std::uint8_t>{0, 0}, {}), DegenerateLabels);
}

TEST(Logistic, DeterministicAndJsonRoundTrip) {
  const Data t = overlapping(200, 3, 5);
  const auto a = LogisticModel::train(t.x, t.y, {});
  const auto b = LogisticModel::train(t.x, t.y, {});
  EXPECT_EQ(a.weights(), b.weights());
  const auto c = LogisticModel::from_json(nlohmann::json::parse(a.to_json().dump()));
  EXPECT_EQ(a.predict_proba(t.x), c.predict_proba(t.x));
}

TEST(Standardizer, ZScoresColumns) {
  DenseMatrix x(4, 2, {1, 5, 2, 5, 3, 5, 4, 5});
  const auto s = Standardizer::fit(x);
  const DenseMatrix z = s.apply(x);
  double mean = 0, var = 0;
  for (std::size_t i = 0; i < 4; ++i) mean += z(i, 0);
  for (std::size_t i = 0; i < 4; ++i) var += z(i, 0) * z(i, 0);
  EXPECT_NEAR(mean, 0, 1e-12);
  EXPECT_NEAR(var / 4, 1, 1e-12);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(z(i, 1), 0.0);
}

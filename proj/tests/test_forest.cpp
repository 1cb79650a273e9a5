#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "tieinfer/errors.hpp"
#include "tieinfer/learn/cv.hpp"
#include "tieinfer/learn/forest.hpp"
#include "tieinfer/learn/metrics.hpp"
#include "tieinfer/rng.hpp"

using namespace tieinfer;
using namespace tieinfer::learn;

namespace {

struct Toy {
  DenseMatrix x;
  std::vector<std::uint8_t> y;
};

Toy separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Toy t{DenseMatrix(n, 2), std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    t.x(i, 0) = rng.uniform(-1, 1);
    t.x(i, 1) = rng.uniform(-1, 1);
    t.y[i] = t.x(i, 0) + 0.5 * t.x(i, 1) > 0.2;
  }
  return t;
}

Toy noise(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Toy t{DenseMatrix(n, d), std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) t.x(i, j) = rng.uniform();
    t.y[i] = rng.bernoulli(0.3);
  }
  return t;
}

}  // namespace

TEST(Forest, MemorizesSeparableData) {
  const Toy t = separable(300, 1);
  ForestConfig cfg;
  cfg.trees = 30;
  const auto f = RandomForest::train(t.x, t.y, cfg, 7);
  EXPECT_EQ(auroc(f.predict_proba(t.x), t.y), 1.0);
  EXPECT_EQ(f.trees().size(), 30u);
}

TEST(Forest, RandomLabelsGiveChanceCvAuroc) {
  const Toy t = noise(200, 6, 3);
  CvConfig cfg;
  cfg.folds = 5;
  cfg.repeats = 3;
  cfg.model.forest.trees = 50;
  const auto report = cross_validate(t.x, t.y, cfg, 11);
  EXPECT_GE(report.mean_auroc, 0.35);
  EXPECT_LE(report.mean_auroc, 0.65);
}

TEST(Forest, SingleClassThrows) {
  DenseMatrix x(3, 1);
  const std::vector<std::uint8_t> y{1, 1, 1};
  EXPECT_THROW(RandomForest::train(x, y, {}, 1), DegenerateLabels);
  ForestConfig none;
  none.trees = 0;
  EXPECT_THROW(RandomForest::train(x, std::vector<std::uint8_t>{0, 1, 0}, none, 1), ConfigError);
}

TEST(Forest, DeterministicAndThreadIndependent) {
  const Toy t = noise(150, 5, 4);
  ForestConfig one;
  one.trees = 20;
  ForestConfig four = one;
  four.threads = 4;
  std::vector<double> oob1, oob4;
  const auto a = RandomForest::train(t.x, t.y, one, 99, &oob1);
  const auto b = RandomForest::train(t.x, t.y, four, 99, &oob4);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_EQ(oob1, oob4);
  const auto c = RandomForest::train(t.x, t.y, one, 100);
  EXPECT_NE(a.to_json().dump(), c.to_json().dump());
}

TEST(Forest, ImportancesNormalizedAndZeroForUnusedFeatures) {
  Toy t = separable(300, 5);
  // Append a constant column, which can never be split on.
  DenseMatrix x(300, 3);
  for (std::size_t i = 0; i < 300; ++i) {
    x(i, 0) = t.x(i, 0);
    x(i, 1) = 4.0;
    x(i, 2) = t.x(i, 1);
  }
  ForestConfig cfg;
  cfg.trees = 25;
  const auto f = RandomForest::train(x, t.y, cfg, 3);
  const auto& imp = f.importances();
  ASSERT_EQ(imp.size(), 3u);
  for (double v : imp) EXPECT_GE(v, 0);
  EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-9);
  EXPECT_EQ(imp[1], 0.0);
  EXPECT_GT(imp[0], imp[2]);
  for (const auto& tree : f.trees()) {
    for (const auto& n : tree.nodes) EXPECT_NE(n.feature, 1);
  }
}

TEST(Forest, OobScoresAreHonest) {
  const Toy t = noise(300, 4, 6);
  ForestConfig cfg;
  cfg.trees = 60;
  std::vector<double> oob;
  const auto f = RandomForest::train(t.x, t.y, cfg, 8, &oob);
  ASSERT_EQ(oob.size(), 300u);
  // In-sample scores memorize noise; out-of-bag ones do not.
  EXPECT_GT(auroc(f.predict_proba(t.x), t.y), 0.9);
  EXPECT_LT(auroc(oob, t.y), 0.7);
  for (double s : oob) {
    EXPECT_GE(s, 0);
    EXPECT_LE(s, 1);
  }
}

TEST(Forest, DepthAndLeafLimits) {
  const Toy t = separable(400, 9);
  ForestConfig cfg;
  cfg.trees = 5;
  cfg.max_depth = 2;
  const auto shallow = RandomForest::train(t.x, t.y, cfg, 1);
  for (const auto& tree : shallow.trees()) EXPECT_LE(tree.depth(), 2u);
  cfg.max_depth = 0;
  cfg.min_leaf = 50;
  cfg.bootstrap = false;
  const auto f = RandomForest::train(t.x, t.y, cfg, 1);
  for (const auto& tree : f.trees()) {
    for (const auto& n : tree.nodes) {
      if (n.feature >= 0) continue;
      std::size_t hits = 0;
      for (std::size_t i = 0; i < 400; ++i) {
        // Walk each row and count those ending in this leaf.
        std::int32_t at = 0;
        while (tree.nodes[at].feature >= 0) {
          const auto& nd = tree.nodes[at];
          at = t.x(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
        }
        hits += &tree.nodes[at] == &n;
      }
      EXPECT_GE(hits, 50u);
    }
  }
}

TEST(Forest, JsonRoundTripPreservesPredictions) {
  const Toy t = noise(120, 4, 12);
  ForestConfig cfg;
  cfg.trees = 10;
  const auto f = RandomForest::train(t.x, t.y, cfg, 2);
  const auto g = RandomForest::from_json(nlohmann::json::parse(f.to_json().dump()));
  EXPECT_EQ(f.predict_proba(t.x), g.predict_proba(t.x));
  EXPECT_EQ(f.importances(), g.importances());
}

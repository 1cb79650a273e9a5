#pragma once

// Random forest of Gini classification trees for binary labels.

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tieinfer/learn/matrix.hpp"

namespace tieinfer::learn {

struct ForestConfig {
  int trees = 100;
  int max_features = 0;  // 0: ceil(sqrt(d))
  int min_leaf = 1;
  int max_depth = 0;     // 0: unlimited
  bool bootstrap = true;
  // Each bootstrap sample draws the minority class size from both classes;
  // node impurities also weight samples inversely to their in-bag class
  // frequency (a no-op for balanced samples, relevant without bootstrap).
  bool balance_classes = true;
  int threads = 1;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double positive_fraction = 0.0;  // class-weighted, at leaves
};

class DecisionTree {
 public:
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const;
  std::size_t depth() const;
};

class RandomForest {
 public:
  // Throws DegenerateLabels when y has a single class. When oob_scores is
  // non-null it receives, per training row, the mean prediction of the trees
  // that did not see it in-bag (the full-forest prediction if none).
  static RandomForest train(const DenseMatrix& x, std::span<const std::uint8_t> y,
                            const ForestConfig& cfg, std::uint64_t seed,
                            std::vector<double>* oob_scores = nullptr);

  double predict_proba(std::span<const double> row) const;
  std::vector<double> predict_proba(const DenseMatrix& x) const;

  // Normalized mean decrease in (class-weighted) Gini impurity; sums to 1
  // unless no tree ever split, in which case all entries are 0.
  const std::vector<double>& importances() const noexcept { return importances_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const ForestConfig& config() const noexcept { return cfg_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t feature_count() const noexcept { return features_; }

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

 private:
  ForestConfig cfg_;
  std::uint64_t seed_ = 0;
  std::size_t features_ = 0;
  std::vector<DecisionTree> trees_;
  std::vector<double> importances_;
};

}  // namespace tieinfer::learn

#pragma once

// A trained classifier of either kind together with its decision threshold.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tieinfer/learn/forest.hpp"
#include "tieinfer/learn/logistic.hpp"
#include "tieinfer/learn/matrix.hpp"

namespace tieinfer::learn {

enum class ModelKind { RandomForest, Logistic };

std::string_view model_kind_name(ModelKind k);  // "random_forest" | "logistic"
std::optional<ModelKind> parse_model_kind(std::string_view s);

struct ModelConfig {
  ModelKind kind = ModelKind::RandomForest;
  ForestConfig forest;
  LogisticConfig logistic;
  // MCC-optimal cut on the training rows (out-of-bag scores for the forest);
  // when off the threshold stays at 0.5.
  bool tune_threshold = true;
};

struct TrainedModel {
  ModelKind kind = ModelKind::RandomForest;
  std::optional<RandomForest> forest;
  std::optional<LogisticModel> logistic;
  double threshold = 0.5;
  std::vector<double> importances;  // forest only; empty for logistic
  std::uint64_t seed = 0;

  double predict_proba(std::span<const double> row) const;
  std::vector<double> predict_proba(const DenseMatrix& x) const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
};

// `extra_negatives` rows outside x (predicted negative by fiat, scored 0)
// join the threshold search but are never trained on.
TrainedModel train_model(const DenseMatrix& x, std::span<const std::uint8_t> y,
                         const ModelConfig& cfg, std::uint64_t seed,
                         std::size_t extra_negatives = 0, std::size_t extra_positives = 0);

}  // namespace tieinfer::learn

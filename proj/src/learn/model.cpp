#include "tieinfer/learn/model.hpp"

#include <nlohmann/json.hpp>

#include "tieinfer/errors.hpp"
#include "tieinfer/learn/metrics.hpp"

namespace tieinfer::learn {

std::string_view model_kind_name(ModelKind k) {
  return k == ModelKind::RandomForest ? "random_forest" : "logistic";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "random_forest") return ModelKind::RandomForest;
  if (s == "logistic") return ModelKind::Logistic;
  return std::nullopt;
}

double TrainedModel::predict_proba(std::span<const double> row) const {
  return forest ? forest->predict_proba(row) : logistic->predict_proba(row);
}

std::vector<double> TrainedModel::predict_proba(const DenseMatrix& x) const {
  return forest ? forest->predict_proba(x) : logistic->predict_proba(x);
}

TrainedModel train_model(const DenseMatrix& x, std::span<const std::uint8_t> y,
                         const ModelConfig& cfg, std::uint64_t seed,
                         std::size_t extra_negatives, std::size_t extra_positives) {
  TrainedModel m;
  m.kind = cfg.kind;
  m.seed = seed;
  std::vector<double> scores;
  if (cfg.kind == ModelKind::RandomForest) {
    m.forest = RandomForest::train(x, y, cfg.forest, seed, cfg.tune_threshold ? &scores : nullptr);
    m.importances = m.forest->importances();
  } else {
    m.logistic = LogisticModel::train(x, y, cfg.logistic);
    if (cfg.tune_threshold) scores = m.logistic->predict_proba(x);
  }
  if (cfg.tune_threshold) {
    std::vector<std::uint8_t> labels(y.begin(), y.end());
    scores.resize(scores.size() + extra_negatives + extra_positives, 0.0);
    labels.resize(labels.size() + extra_negatives, 0);
    labels.resize(labels.size() + extra_positives, 1);
    m.threshold = choose_threshold(scores, labels).threshold;
  }
  return m;
}

nlohmann::json TrainedModel::to_json() const {
  nlohmann::json j = {{"kind", model_kind_name(kind)},
                      {"threshold", threshold},
                      {"seed", seed},
                      {"importances", importances}};
  if (forest) j["forest"] = forest->to_json();
  if (logistic) j["logistic"] = logistic->to_json();
  return j;
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  TrainedModel m;
  const auto kind = parse_model_kind(j.at("kind").get<std::string>());
  if (!kind) throw ParseError("unknown model kind in model.json", {});
  m.kind = *kind;
  m.threshold = j.at("threshold").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.importances = j.at("importances").get<std::vector<double>>();
  if (m.kind == ModelKind::RandomForest) {
    m.forest = RandomForest::from_json(j.at("forest"));
  } else {
    m.logistic = LogisticModel::from_json(j.at("logistic"));
  }
  return m;
}

}  // namespace tieinfer::learn

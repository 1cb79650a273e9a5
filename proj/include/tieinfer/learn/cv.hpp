#pragma once

// Repeated stratified k-fold cross-validation.
//
// Items 0..n-1 are the rows of x. Optionally, fiat items follow them: dyads
// outside the candidate set, first `fiat_positives` positives and then
// `fiat_negatives` negatives. Fiat items are assigned to folds like any other
// item, are never trained on, score 0 and are always predicted negative.

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tieinfer/learn/matrix.hpp"
#include "tieinfer/learn/metrics.hpp"
#include "tieinfer/learn/model.hpp"
#include "tieinfer/rng.hpp"

namespace tieinfer::learn {

struct CvConfig {
  int folds = 5;
  int repeats = 10;
  ModelConfig model;
  bool keep_models = false;
};

struct FiatItems {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct FoldResult {
  int repeat = 0;
  int fold = 0;
  double auroc = 0.0;
  double mcc = 0.0;
  double threshold = 0.5;
  ConfusionMatrix confusion;
  std::size_t train_rows = 0;
  std::size_t test_items = 0;
};

struct CvReport {
  int folds = 0;
  int repeats = 0;
  std::vector<FoldResult> fold_results;  // repeat-major
  double mean_auroc = 0.0;
  double mean_mcc = 0.0;
  std::vector<double> median_importances;  // empty for logistic
  // Per repeat, indexed by item (rows of x, then fiat items).
  std::vector<std::vector<int>> fold_of;
  std::vector<std::vector<double>> oof_scores;
  std::vector<std::vector<std::uint8_t>> oof_predicted;
  std::vector<TrainedModel> models;  // repeat-major, when keep_models
};

// Fold index per item: each class is shuffled and dealt round-robin, so every
// fold receives floor or ceil of its class share. Throws StratificationError
// when either class has fewer than k items.
std::vector<int> stratified_folds(std::span<const std::uint8_t> labels, int k, Rng& rng);

// Seed of the model trained for (repeat, fold).
std::uint64_t fold_seed(std::uint64_t seed, int repeat, int fold);

// Labels of all items: y followed by the fiat labels.
std::vector<std::uint8_t> item_labels(std::span<const std::uint8_t> y, const FiatItems& fiat);

CvReport cross_validate(const DenseMatrix& x, std::span<const std::uint8_t> y,
                        const CvConfig& cfg, std::uint64_t seed, const FiatItems& fiat = {});

// Deterministic serialization (fold metrics, means, importances).
nlohmann::json cv_report_json(const CvReport& r);

}  // namespace tieinfer::learn

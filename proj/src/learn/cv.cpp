#include "tieinfer/learn/cv.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "tieinfer/errors.hpp"

namespace tieinfer::learn {

std::vector<int> stratified_folds(std::span<const std::uint8_t> labels, int k, Rng& rng) {
  if (k < 2) throw ConfigError("cross-validation needs at least 2 folds");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] ? 1 : 0].push_back(i);
  if (by_class[1].size() < static_cast<std::size_t>(k) ||
      by_class[0].size() < static_cast<std::size_t>(k)) {
    throw StratificationError("each class needs at least " + std::to_string(k) +
                              " items for " + std::to_string(k) + "-fold stratification (" +
                              std::to_string(by_class[1].size()) + " positive, " +
                              std::to_string(by_class[0].size()) + " negative)");
  }
  std::vector<int> fold(labels.size(), 0);
  std::size_t deal = 0;
  for (int c : {1, 0}) {
    rng.shuffle(std::span<std::size_t>(by_class[c]));
    for (std::size_t i : by_class[c]) fold[i] = static_cast<int>(deal++ % k);
  }
  return fold;
}

std::uint64_t fold_seed(std::uint64_t seed, int repeat, int fold) {
  return Rng::stream(seed, StreamTag::Repeat,
                     static_cast<std::uint64_t>(repeat) * 1000003u + static_cast<std::uint64_t>(fold))
      .next();
}

std::vector<std::uint8_t> item_labels(std::span<const std::uint8_t> y, const FiatItems& fiat) {
  std::vector<std::uint8_t> labels(y.begin(), y.end());
  labels.insert(labels.end(), fiat.positives, 1);
  labels.insert(labels.end(), fiat.negatives, 0);
  return labels;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

CvReport cross_validate(const DenseMatrix& x, std::span<const std::uint8_t> y,
                        const CvConfig& cfg, std::uint64_t seed, const FiatItems& fiat) {
  if (cfg.repeats < 1) throw ConfigError("cross-validation needs at least one repeat");
  const std::size_t n = x.rows();
  const auto labels = item_labels(y, fiat);
  const std::size_t items = labels.size();

  CvReport report;
  report.folds = cfg.folds;
  report.repeats = cfg.repeats;
  std::vector<std::vector<double>> importances;

  for (int r = 0; r < cfg.repeats; ++r) {
    Rng rng = Rng::stream(seed, StreamTag::Fold, static_cast<std::uint64_t>(r));
    auto fold = stratified_folds(labels, cfg.folds, rng);
    std::vector<double> oof(items, 0.0);
    std::vector<std::uint8_t> predicted(items, 0);

    for (int f = 0; f < cfg.folds; ++f) {
      std::vector<std::size_t> train_rows, test_rows;
      for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test_rows : train_rows).push_back(i);
      FiatItems train_fiat;
      for (std::size_t i = n; i < items; ++i) {
        if (fold[i] == f) continue;
        ++(labels[i] ? train_fiat.positives : train_fiat.negatives);
      }
      std::vector<std::uint8_t> train_y(train_rows.size());
      for (std::size_t i = 0; i < train_rows.size(); ++i) train_y[i] = y[train_rows[i]];

      const TrainedModel model =
          train_model(x.select_rows(train_rows), train_y, cfg.model, fold_seed(seed, r, f),
                      train_fiat.negatives, train_fiat.positives);

      std::vector<double> scores;
      std::vector<std::uint8_t> test_y, test_pred;
      for (std::size_t i : test_rows) {
        const double p = model.predict_proba(x.row(i));
        oof[i] = p;
        predicted[i] = p > model.threshold ? 1 : 0;
        scores.push_back(p);
        test_y.push_back(labels[i]);
        test_pred.push_back(predicted[i]);
      }
      for (std::size_t i = n; i < items; ++i) {
        if (fold[i] != f) continue;
        scores.push_back(0.0);
        test_y.push_back(labels[i]);
        test_pred.push_back(0);
      }

      FoldResult fr;
      fr.repeat = r;
      fr.fold = f;
      fr.threshold = model.threshold;
      fr.auroc = auroc(scores, test_y);
      for (std::size_t i = 0; i < test_y.size(); ++i) {
        if (test_y[i]) {
          test_pred[i] ? ++fr.confusion.tp : ++fr.confusion.fn;
        } else {
          test_pred[i] ? ++fr.confusion.fp : ++fr.confusion.tn;
        }
      }
      fr.mcc = mcc(fr.confusion);
      fr.train_rows = train_rows.size();
      fr.test_items = test_y.size();
      report.fold_results.push_back(fr);
      if (!model.importances.empty()) importances.push_back(model.importances);
      if (cfg.keep_models) report.models.push_back(model);
    }
    report.fold_of.push_back(std::move(fold));
    report.oof_scores.push_back(std::move(oof));
    report.oof_predicted.push_back(std::move(predicted));
  }

  for (const auto& fr : report.fold_results) {
    report.mean_auroc += fr.auroc;
    report.mean_mcc += fr.mcc;
  }
  report.mean_auroc /= static_cast<double>(report.fold_results.size());
  report.mean_mcc /= static_cast<double>(report.fold_results.size());

  if (!importances.empty()) {
    report.median_importances.resize(x.cols());
    std::vector<double> column(importances.size());
    for (std::size_t c = 0; c < x.cols(); ++c) {
      for (std::size_t k = 0; k < importances.size(); ++k) column[k] = importances[k][c];
      report.median_importances[c] = median(column);
    }
  }
  return report;
}

nlohmann::json cv_report_json(const CvReport& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.fold_results) {
    folds.push_back({{"repeat", f.repeat},
                     {"fold", f.fold},
                     {"auroc", f.auroc},
                     {"mcc", f.mcc},
                     {"threshold", f.threshold},
                     {"tp", f.confusion.tp},
                     {"tn", f.confusion.tn},
                     {"fp", f.confusion.fp},
                     {"fn", f.confusion.fn},
                     {"train_rows", f.train_rows},
                     {"test_items", f.test_items}});
  }
  return {{"folds", r.folds},
          {"repeats", r.repeats},
          {"mean_auroc", r.mean_auroc},
          {"mean_mcc", r.mean_mcc},
          {"fold_results", folds},
          {"median_importances", r.median_importances}};
}

}  // namespace tieinfer::learn

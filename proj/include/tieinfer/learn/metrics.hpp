#pragma once

#include <cstdint>
#include <span>

namespace tieinfer::learn {

struct ConfusionMatrix {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Probability that a random positive outscores a random negative, ties
// counted one half. Rank-based, O(n log n). Throws UndefinedMetric unless both
// classes are present.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Matthews correlation coefficient; 0 when any marginal is zero.
double mcc(const ConfusionMatrix& c);

// Predicted positive iff score > threshold.
ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const std::uint8_t> labels,
                             double threshold);

struct ThresholdChoice {
  double threshold = 0.5;
  double mcc = 0.0;
};

// Scans the midpoints between adjacent distinct sorted scores and keeps the
// one with the highest MCC (lowest threshold on ties). Falls back to 0.5 when
// only one class or one distinct score is present.
ThresholdChoice choose_threshold(std::span<const double> scores,
                                 std::span<const std::uint8_t> labels);

}  // namespace tieinfer::learn

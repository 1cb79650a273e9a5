#include "tieinfer/learn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tieinfer/errors.hpp"

namespace tieinfer::learn {

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const std::size_t n = scores.size();
  std::uint64_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) positives += labels[i] ? 1 : 0;
  const std::uint64_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetric("AUROC needs at least one positive and one negative");
  }

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });

  // Twice the positive rank sum: a tie group spanning 1-based ranks
  // [first, last] gives each member rank (first + last) / 2.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    std::uint64_t group_pos = 0;
    for (std::size_t k = i; k < j; ++k) group_pos += labels[order[k]] ? 1 : 0;
    twice_rank_sum += group_pos * static_cast<std::uint64_t>((i + 1) + j);
    i = j;
  }
  // U = rank_sum - P(P+1)/2; compute in doubled integers to stay exact.
  const std::uint64_t twice_u = twice_rank_sum - positives * (positives + 1);
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

double mcc(const ConfusionMatrix& c) {
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const std::uint8_t> labels,
                             double threshold) {
  ConfusionMatrix c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    if (labels[i]) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

ThresholdChoice choose_threshold(std::span<const double> scores,
                                 std::span<const std::uint8_t> labels) {
  const std::size_t n = scores.size();
  std::uint64_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) positives += labels[i] ? 1 : 0;
  if (positives == 0 || positives == n) return {};

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });

  // Sweep thresholds upward: everything at or below the cut is predicted
  // negative.
  ConfusionMatrix c;
  c.tp = positives;
  c.fp = n - positives;
  ThresholdChoice best;
  bool found = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        --c.tp;
        ++c.fn;
      } else {
        --c.fp;
        ++c.tn;
      }
    }
    if (j == n) break;
    const double lo = scores[order[i]];
    const double hi = scores[order[j]];
    double mid = lo + (hi - lo) / 2.0;
    if (!(mid > lo && mid < hi)) mid = lo;
    const double m = mcc(c);
    if (!found || m > best.mcc) {
      best = {mid, m};
      found = true;
    }
    i = j;
  }
  if (!found) return {};
  return best;
}

}  // namespace tieinfer::learn

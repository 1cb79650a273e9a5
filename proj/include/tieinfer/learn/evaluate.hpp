#pragma once

// Glue between feature matrices, label sets and the learners: assembling
// labelled datasets for one channel and the channel-discrimination task.

#include <cstdint>
#include <functional>
#include <vector>

#include "tieinfer/core.hpp"
#include "tieinfer/features.hpp"
#include "tieinfer/ingest.hpp"
#include "tieinfer/learn/cv.hpp"
#include "tieinfer/learn/matrix.hpp"
#include "tieinfer/longitudinal.hpp"

namespace tieinfer::learn {

// Candidate rows whose endpoints are both on the channel roster, plus the
// roster pairs outside the candidate set as fiat items.
struct Dataset {
  YearMonth month;
  Channel channel = Channel::Call;
  DenseMatrix x;
  std::vector<std::uint8_t> y;
  std::vector<Dyad> dyads;      // per row of x
  FiatItems fiat;
  std::vector<Dyad> fiat_dyads;  // positives first, then negatives
};

using DyadFilter = std::function<bool(const Dyad&)>;

// Optional filter restricts both candidates and fiat pairs (e.g. same-major).
Dataset build_dataset(const FeatureMatrix& fm, const LabelSet& labels, Channel channel,
                      const DyadFilter& keep = {});

// Out-of-fold scores of the candidate rows from one CV repeat.
MonthScores month_scores(const Dataset& ds, const CvReport& report, int repeat = 0);

struct DiscriminationResult {
  Channel a = Channel::FbInteraction;
  Channel b = Channel::Call;
  double auc = 0.0;
  std::size_t dyad_count = 0;
  std::size_t a_only = 0;
  std::size_t b_only = 0;
};

// Dyads with an edge in exactly one of the two channels this month, both
// endpoints on both rosters, restricted to the candidate set. Class 1 is
// "a only". Returns the mean CV AUROC. Throws InsufficientData when either
// side is empty.
DiscriminationResult discriminate_channels(const FeatureMatrix& fm, const LabelSet& labels,
                                           Channel a, Channel b, const CvConfig& cfg,
                                           std::uint64_t seed);

}  // namespace tieinfer::learn

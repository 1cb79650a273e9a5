#include "tieinfer/learn/evaluate.hpp"

#include <algorithm>

#include "tieinfer/errors.hpp"

namespace tieinfer::learn {

Dataset build_dataset(const FeatureMatrix& fm, const LabelSet& labels, Channel channel,
                      const DyadFilter& keep) {
  Dataset ds;
  ds.month = fm.month;
  ds.channel = channel;
  const auto& roster = labels.channel_users(channel);
  const auto& edges = labels.edges(fm.month, channel);

  std::vector<double> values;
  for (std::size_t i = 0; i < fm.rows(); ++i) {
    const Dyad& d = fm.dyads[i];
    if (!roster.contains(d.a) || !roster.contains(d.b)) continue;
    if (keep && !keep(d)) continue;
    ds.dyads.push_back(d);
    ds.y.push_back(edges.contains(d) ? 1 : 0);
    const auto row = fm.row(i);
    values.insert(values.end(), row.begin(), row.end());
  }
  ds.x = DenseMatrix(ds.dyads.size(), kFeatureCount, std::move(values));

  // fm.dyads is sorted, so membership is a binary search.
  std::vector<Dyad> fiat_neg;
  const std::vector<UserId> users(roster.begin(), roster.end());
  for (std::size_t i = 0; i < users.size(); ++i) {
    for (std::size_t j = i + 1; j < users.size(); ++j) {
      Dyad d{users[i], users[j]};
      if (keep && !keep(d)) continue;
      if (std::binary_search(fm.dyads.begin(), fm.dyads.end(), d)) continue;
      if (edges.contains(d)) {
        ds.fiat_dyads.push_back(std::move(d));
      } else {
        fiat_neg.push_back(std::move(d));
      }
    }
  }
  ds.fiat.positives = ds.fiat_dyads.size();
  ds.fiat.negatives = fiat_neg.size();
  ds.fiat_dyads.insert(ds.fiat_dyads.end(), std::make_move_iterator(fiat_neg.begin()),
                       std::make_move_iterator(fiat_neg.end()));
  return ds;
}

MonthScores month_scores(const Dataset& ds, const CvReport& report, int repeat) {
  MonthScores s;
  s.month = ds.month;
  s.dyads = ds.dyads;
  const auto& scores = report.oof_scores.at(static_cast<std::size_t>(repeat));
  const auto& predicted = report.oof_predicted.at(static_cast<std::size_t>(repeat));
  s.probability.assign(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(ds.dyads.size()));
  s.predicted.assign(predicted.begin(),
                     predicted.begin() + static_cast<std::ptrdiff_t>(ds.dyads.size()));
  s.label = ds.y;
  return s;
}

DiscriminationResult discriminate_channels(const FeatureMatrix& fm, const LabelSet& labels,
                                           Channel a, Channel b, const CvConfig& cfg,
                                           std::uint64_t seed) {
  if (a == b) throw ConfigError("channel discrimination needs two different channels");
  const auto& ra = labels.channel_users(a);
  const auto& rb = labels.channel_users(b);
  const auto& ea = labels.edges(fm.month, a);
  const auto& eb = labels.edges(fm.month, b);
  auto on_both = [&](const Dyad& d) {
    return ra.contains(d.a) && ra.contains(d.b) && rb.contains(d.a) && rb.contains(d.b);
  };

  DiscriminationResult res;
  res.a = a;
  res.b = b;
  std::vector<double> values;
  std::vector<std::uint8_t> y;
  for (std::size_t i = 0; i < fm.rows(); ++i) {
    const Dyad& d = fm.dyads[i];
    const bool in_a = ea.contains(d), in_b = eb.contains(d);
    if (in_a == in_b || !on_both(d)) continue;
    y.push_back(in_a ? 1 : 0);
    ++(in_a ? res.a_only : res.b_only);
    const auto row = fm.row(i);
    values.insert(values.end(), row.begin(), row.end());
  }
  if (res.a_only == 0 || res.b_only == 0) {
    throw InsufficientData("no exclusive " + std::string(channel_token(res.a_only == 0 ? a : b)) +
                           " dyads with features in " + fm.month.str());
  }
  res.dyad_count = y.size();
  const DenseMatrix x(y.size(), kFeatureCount, std::move(values));
  CvConfig local = cfg;
  local.model.tune_threshold = false;
  res.auc = cross_validate(x, y, local, seed).mean_auroc;
  return res;
}

}  // namespace tieinfer::learn

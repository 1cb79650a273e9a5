#include "tieinfer/learn/forest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "tieinfer/errors.hpp"
#include "tieinfer/parallel.hpp"
#include "tieinfer/rng.hpp"

namespace tieinfer::learn {

double DecisionTree::predict(std::span<const double> row) const {
  std::int32_t n = 0;
  while (nodes[n].feature >= 0) {
    const auto& node = nodes[n];
    n = row[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes[n].positive_fraction;
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 1}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes[n].feature >= 0) {
      stack.push_back({nodes[n].left, d + 1});
      stack.push_back({nodes[n].right, d + 1});
    }
  }
  return best;
}

namespace {

constexpr std::size_t kMaxBins = 256;

// Per-feature quantile bins over the training values. cuts[f][b] separates bin
// b from bin b + 1 and lies strictly between two observed values, so
// "value <= cuts[f][b]" and "bin <= b" agree on every training row.
struct Binned {
  std::size_t rows = 0;
  std::vector<std::vector<double>> cuts;
  std::vector<std::uint8_t> bins;  // column-major, rows x features

  std::uint8_t at(std::size_t row, std::size_t f) const { return bins[f * rows + row]; }
};

Binned bin_features(const DenseMatrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  Binned out;
  out.rows = n;
  out.cuts.resize(d);
  out.bins.resize(n * d);
  std::vector<double> sorted(n);
  for (std::size_t f = 0; f < d; ++f) {
    for (std::size_t i = 0; i < n; ++i) sorted[i] = x(i, f);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct;
    for (double v : sorted) {
      if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
    }
    auto& cuts = out.cuts[f];
    auto midpoint = [](double lo, double hi) {
      const double mid = lo + (hi - lo) / 2.0;
      return (mid >= lo && mid < hi) ? mid : lo;
    };
    if (distinct.size() <= kMaxBins) {
      for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        cuts.push_back(midpoint(distinct[i], distinct[i + 1]));
      }
    } else {
      // Equal-count bins over the sorted values; a cut falls after the last
      // copy of the value at each quantile position.
      for (std::size_t b = 1; b < kMaxBins; ++b) {
        const std::size_t pos = b * n / kMaxBins;
        const double lo = sorted[pos - 1];
        const auto next = std::upper_bound(sorted.begin(), sorted.end(), lo);
        if (next == sorted.end()) break;
        const double cut = midpoint(lo, *next);
        if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = std::lower_bound(cuts.begin(), cuts.end(), x(i, f));
      out.bins[f * n + i] = static_cast<std::uint8_t>(it - cuts.begin());
    }
  }
  return out;
}

struct InBag {
  std::uint32_t row;
  double weight;
  std::uint8_t label;
};

struct TreeResult {
  DecisionTree tree;
  std::vector<double> importance;
  std::vector<std::uint8_t> in_bag;  // per training row
};

class TreeBuilder {
 public:
  TreeBuilder(const DenseMatrix& x, std::span<const std::uint8_t> y, const Binned& binned,
              const ForestConfig& cfg, int max_features)
      : x_(x), y_(y), binned_(binned), cfg_(cfg), max_features_(max_features) {}

  TreeResult build(Rng& rng) const {
    const std::size_t n = x_.rows();
    TreeResult out;
    out.importance.assign(x_.cols(), 0.0);
    out.in_bag.assign(n, 0);

    std::vector<std::uint32_t> counts(n, 0);
    draw_bootstrap(rng, counts);

    double class_count[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) class_count[y_[i]] += counts[i];
    double class_weight[2] = {1.0, 1.0};
    if (cfg_.balance_classes && class_count[0] > 0 && class_count[1] > 0) {
      const double total = class_count[0] + class_count[1];
      class_weight[0] = total / (2.0 * class_count[0]);
      class_weight[1] = total / (2.0 * class_count[1]);
    }

    std::vector<InBag> samples;
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[i] == 0) continue;
      out.in_bag[i] = 1;
      samples.push_back({static_cast<std::uint32_t>(i), counts[i] * class_weight[y_[i]], y_[i]});
    }
    std::vector<std::uint32_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0u);

    grow(samples, idx, rng, out);
    return out;
  }

 private:
  void draw_bootstrap(Rng& rng, std::vector<std::uint32_t>& counts) const {
    const std::size_t n = x_.rows();
    if (!cfg_.bootstrap) {
      std::fill(counts.begin(), counts.end(), 1u);
      return;
    }
    std::vector<std::uint32_t> by_class[2];
    for (std::size_t i = 0; i < n; ++i) by_class[y_[i]].push_back(static_cast<std::uint32_t>(i));
    if (cfg_.balance_classes && !by_class[0].empty() && !by_class[1].empty()) {
      // Balanced bootstrap: the minority class size, drawn with replacement,
      // from each class.
      const std::size_t m = std::min(by_class[0].size(), by_class[1].size());
      for (const auto& pool : by_class) {
        for (std::size_t draw = 0; draw < m; ++draw) ++counts[pool[rng.below(pool.size())]];
      }
      return;
    }
    for (std::size_t draw = 0; draw < n; ++draw) ++counts[rng.below(n)];
  }

  struct Split {
    int feature = -1;
    int bin = -1;  // left child takes bins <= bin
    double decrease = 0.0;
  };

  struct Histogram {
    std::array<double, kMaxBins> w0{}, w1{};
    std::array<std::uint32_t, kMaxBins> count{};
  };

  static double weighted_gini(double w0, double w1) {
    const double w = w0 + w1;
    return w > 0.0 ? 2.0 * w0 * w1 / w : 0.0;
  }

  Split best_split(const std::vector<InBag>& samples, std::span<const std::uint32_t> node,
                   double w0, double w1, Rng& rng, Histogram& h,
                   std::vector<int>& features) const {
    const std::size_t d = x_.cols();
    const double parent = weighted_gini(w0, w1);
    const auto min_leaf = static_cast<std::uint32_t>(std::max(1, cfg_.min_leaf));
    const auto len = static_cast<std::uint32_t>(node.size());
    Split best;

    std::iota(features.begin(), features.end(), 0);
    int visited_informative = 0;
    for (std::size_t fi = 0; fi < d; ++fi) {
      if (visited_informative >= max_features_ && best.feature >= 0) break;
      // Lazily extend a Fisher-Yates shuffle of the feature indices.
      const std::size_t pick = fi + rng.below(d - fi);
      std::swap(features[fi], features[pick]);
      const int f = features[fi];
      const std::size_t nbins = binned_.cuts[f].size() + 1;
      if (nbins < 2) continue;

      std::fill_n(h.w0.begin(), nbins, 0.0);
      std::fill_n(h.w1.begin(), nbins, 0.0);
      std::fill_n(h.count.begin(), nbins, 0u);
      const std::uint8_t* col = &binned_.bins[static_cast<std::size_t>(f) * binned_.rows];
      std::uint8_t lo = 255, hi = 0;
      for (std::uint32_t s : node) {
        const auto& smp = samples[s];
        const std::uint8_t b = col[smp.row];
        (smp.label ? h.w1 : h.w0)[b] += smp.weight;
        ++h.count[b];
        lo = std::min(lo, b);
        hi = std::max(hi, b);
      }
      if (lo == hi) continue;  // constant in this node
      ++visited_informative;

      double l0 = 0.0, l1 = 0.0;
      std::uint32_t left = 0;
      for (std::size_t b = lo; b < hi; ++b) {
        l0 += h.w0[b];
        l1 += h.w1[b];
        left += h.count[b];
        if (h.count[b] == 0) continue;
        if (left < min_leaf || len - left < min_leaf) continue;
        const double decrease = parent - weighted_gini(l0, l1) - weighted_gini(w0 - l0, w1 - l1);
        if (decrease > best.decrease + 1e-12) best = {f, static_cast<int>(b), decrease};
      }
    }
    return best;
  }

  void grow(const std::vector<InBag>& samples, std::vector<std::uint32_t>& idx, Rng& rng,
            TreeResult& out) const {
    struct Pending {
      std::int32_t node;
      std::size_t begin, end;
      int depth;
    };
    auto& nodes = out.tree.nodes;
    nodes.emplace_back();
    std::vector<Pending> stack{{0, 0, idx.size(), 1}};
    Histogram h;
    std::vector<int> features(x_.cols());
    const auto min_leaf = static_cast<std::size_t>(std::max(1, cfg_.min_leaf));

    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      double w0 = 0.0, w1 = 0.0;
      for (std::size_t k = p.begin; k < p.end; ++k) {
        (samples[idx[k]].label ? w1 : w0) += samples[idx[k]].weight;
      }
      nodes[p.node].positive_fraction = (w0 + w1) > 0.0 ? w1 / (w0 + w1) : 0.0;

      const bool pure = w0 == 0.0 || w1 == 0.0;
      const bool too_deep = cfg_.max_depth > 0 && p.depth >= cfg_.max_depth;
      const bool too_small = p.end - p.begin < 2 * min_leaf;
      if (pure || too_deep || too_small) continue;

      std::span<std::uint32_t> node(idx.data() + p.begin, p.end - p.begin);
      const Split split = best_split(samples, node, w0, w1, rng, h, features);
      if (split.feature < 0) continue;

      const std::uint8_t* col =
          &binned_.bins[static_cast<std::size_t>(split.feature) * binned_.rows];
      auto mid = std::stable_partition(node.begin(), node.end(), [&](std::uint32_t s) {
        return col[samples[s].row] <= split.bin;
      });
      const std::size_t cut = p.begin + static_cast<std::size_t>(mid - node.begin());

      out.importance[split.feature] += split.decrease;
      const auto left = static_cast<std::int32_t>(nodes.size());
      nodes.emplace_back();
      const auto right = static_cast<std::int32_t>(nodes.size());
      nodes.emplace_back();
      nodes[p.node].feature = split.feature;
      nodes[p.node].threshold = binned_.cuts[split.feature][split.bin];
      nodes[p.node].left = left;
      nodes[p.node].right = right;
      stack.push_back({right, cut, p.end, p.depth + 1});
      stack.push_back({left, p.begin, cut, p.depth + 1});
    }
  }

  const DenseMatrix& x_;
  std::span<const std::uint8_t> y_;
  const Binned& binned_;
  const ForestConfig& cfg_;
  int max_features_;
};

}  // namespace

RandomForest RandomForest::train(const DenseMatrix& x, std::span<const std::uint8_t> y,
                                 const ForestConfig& cfg, std::uint64_t seed,
                                 std::vector<double>* oob_scores) {
  const std::size_t n = x.rows();
  std::size_t positives = 0;
  for (auto v : y) positives += v ? 1 : 0;
  if (positives == 0 || positives == n) {
    throw DegenerateLabels("random forest needs both classes in the training labels");
  }
  if (cfg.trees < 1) throw ConfigError("forest needs at least one tree");

  RandomForest forest;
  forest.cfg_ = cfg;
  forest.seed_ = seed;
  forest.features_ = x.cols();
  const int max_features =
      cfg.max_features > 0
          ? std::min<int>(cfg.max_features, static_cast<int>(x.cols()))
          : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));

  const Binned binned = bin_features(x);
  const TreeBuilder builder(x, y, binned, cfg, max_features);
  std::vector<TreeResult> results(static_cast<std::size_t>(cfg.trees));
  parallel_for(results.size(), cfg.threads, [&](std::size_t t) {
    Rng rng = Rng::stream(seed, StreamTag::Tree, t);
    results[t] = builder.build(rng);
  });

  forest.importances_.assign(x.cols(), 0.0);
  for (auto& r : results) {
    const double total = std::accumulate(r.importance.begin(), r.importance.end(), 0.0);
    if (total > 0.0) {
      for (std::size_t f = 0; f < x.cols(); ++f) forest.importances_[f] += r.importance[f] / total;
    }
  }
  const double sum = std::accumulate(forest.importances_.begin(), forest.importances_.end(), 0.0);
  if (sum > 0.0) {
    for (auto& v : forest.importances_) v /= sum;
  }

  if (oob_scores != nullptr) {
    std::vector<double> total(n, 0.0);
    std::vector<std::uint32_t> seen(n, 0);
    for (const auto& r : results) {
      for (std::size_t i = 0; i < n; ++i) {
        if (r.in_bag[i]) continue;
        total[i] += r.tree.predict(x.row(i));
        ++seen[i];
      }
    }
    oob_scores->assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      (*oob_scores)[i] = seen[i] > 0 ? total[i] / seen[i] : -1.0;
    }
    forest.trees_.reserve(results.size());
    for (auto& r : results) forest.trees_.push_back(std::move(r.tree));
    for (std::size_t i = 0; i < n; ++i) {
      if (seen[i] == 0) (*oob_scores)[i] = forest.predict_proba(x.row(i));
    }
    return forest;
  }

  forest.trees_.reserve(results.size());
  for (auto& r : results) forest.trees_.push_back(std::move(r.tree));
  return forest;
}

double RandomForest::predict_proba(std::span<const double> row) const {
  double total = 0.0;
  for (const auto& t : trees_) total += t.predict(row);
  return trees_.empty() ? 0.0 : total / static_cast<double>(trees_.size());
}

std::vector<double> RandomForest::predict_proba(const DenseMatrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_proba(x.row(i));
  return out;
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(),
                   value = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.positive_fraction);
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"value", value}});
  }
  return {{"config",
           {{"trees", cfg_.trees},
            {"max_features", cfg_.max_features},
            {"min_leaf", cfg_.min_leaf},
            {"max_depth", cfg_.max_depth},
            {"bootstrap", cfg_.bootstrap},
            {"balance_classes", cfg_.balance_classes}}},
          {"seed", seed_},
          {"features", features_},
          {"importances", importances_},
          {"trees", trees}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  RandomForest f;
  const auto& c = j.at("config");
  f.cfg_.trees = c.at("trees").get<int>();
  f.cfg_.max_features = c.at("max_features").get<int>();
  f.cfg_.min_leaf = c.at("min_leaf").get<int>();
  f.cfg_.max_depth = c.at("max_depth").get<int>();
  f.cfg_.bootstrap = c.at("bootstrap").get<bool>();
  f.cfg_.balance_classes = c.at("balance_classes").get<bool>();
  f.seed_ = j.at("seed").get<std::uint64_t>();
  f.features_ = j.at("features").get<std::size_t>();
  f.importances_ = j.at("importances").get<std::vector<double>>();
  for (const auto& t : j.at("trees")) {
    DecisionTree tree;
    const auto feature = t.at("feature").get<std::vector<std::int32_t>>();
    const auto threshold = t.at("threshold").get<std::vector<double>>();
    const auto left = t.at("left").get<std::vector<std::int32_t>>();
    const auto right = t.at("right").get<std::vector<std::int32_t>>();
    const auto value = t.at("value").get<std::vector<double>>();
    tree.nodes.resize(feature.size());
    for (std::size_t i = 0; i < feature.size(); ++i) {
      tree.nodes[i] = TreeNode{feature[i], threshold[i], left[i], right[i], value[i]};
    }
    f.trees_.push_back(std::move(tree));
  }
  return f;
}

}  // namespace tieinfer::learn

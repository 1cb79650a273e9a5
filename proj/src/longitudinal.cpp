#include "tieinfer/longitudinal.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include "tieinfer/errors.hpp"
#include "tieinfer/learn/cv.hpp"
#include "tieinfer/learn/metrics.hpp"
#include "tieinfer/rng.hpp"
#include "tieinfer/text.hpp"

namespace tieinfer {

void write_predictions_csv(std::ostream& out, const MonthScores& s) {
  out << "user_a,user_b,year,month,probability,predicted,label\n";
  for (std::size_t i = 0; i < s.dyads.size(); ++i) {
    out << s.dyads[i].a.str() << ',' << s.dyads[i].b.str() << ',' << s.month.year << ','
        << s.month.month << ',' << text::format_double(s.probability[i]) << ','
        << int(s.predicted[i]) << ',' << int(s.label[i]) << '\n';
  }
}

MonthScores read_predictions_csv(std::istream& in) {
  if (!in.good()) throw IoError("predictions stream is not readable");
  MonthScores s;
  std::string line;
  std::vector<std::string_view> f;
  std::size_t line_no = 0;
  bool have_month = false;
  std::vector<std::pair<Dyad, std::size_t>> order;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = text::trim(line);
    if (view.empty()) continue;
    text::split(view, ',', f);
    if (line_no == 1) {
      if (f.size() != 7 || text::trim(f[0]) != "user_a" || text::trim(f[4]) != "probability") {
        throw ParseError("predictions header must be user_a,user_b,year,month,probability,"
                         "predicted,label",
                         {1});
      }
      continue;
    }
    if (f.size() != 7) throw ParseError("wrong field count", {line_no});
    const auto year = text::parse_int<int>(text::trim(f[2]));
    const auto month = text::parse_int<int>(text::trim(f[3]));
    const auto p = text::parse_double(text::trim(f[4]));
    const auto pred = text::parse_bool(text::trim(f[5]));
    const auto label = text::parse_bool(text::trim(f[6]));
    if (!year || !month || *month < 1 || *month > 12 || !p || *p < 0.0 || *p > 1.0 || !pred ||
        !label) {
      throw ParseError("malformed prediction record", {line_no});
    }
    const YearMonth ym{*year, *month};
    if (!have_month) {
      s.month = ym;
      have_month = true;
    } else if (!(ym == s.month)) {
      throw ParseError("predictions file mixes months", {line_no});
    }
    s.dyads.push_back(canonical_dyad(text::trim(f[0]), text::trim(f[1])));
    s.probability.push_back(*p);
    s.predicted.push_back(*pred ? 1 : 0);
    s.label.push_back(*label ? 1 : 0);
  }
  if (!have_month) throw ParseError("predictions file has no records");

  std::vector<std::size_t> idx(s.dyads.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return s.dyads[x] < s.dyads[y]; });
  MonthScores sorted;
  sorted.month = s.month;
  for (auto i : idx) {
    if (!sorted.dyads.empty() && sorted.dyads.back() == s.dyads[i]) {
      throw ParseError("duplicate dyad " + s.dyads[i].a.str() + "," + s.dyads[i].b.str() +
                       " in predictions");
    }
    sorted.dyads.push_back(s.dyads[i]);
    sorted.probability.push_back(s.probability[i]);
    sorted.predicted.push_back(s.predicted[i]);
    sorted.label.push_back(s.label[i]);
  }
  return sorted;
}

MonthScores read_predictions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_predictions_csv(in);
}

ProbabilityMatrix::ProbabilityMatrix(std::vector<YearMonth> months, std::vector<Dyad> dyads)
    : months_(std::move(months)),
      dyads_(std::move(dyads)),
      p_(months_.size() * dyads_.size(), 0.0),
      present_(months_.size() * dyads_.size(), 0) {}

void ProbabilityMatrix::set(std::size_t row, std::size_t col, double p) {
  p_[row * cols() + col] = p;
  present_[row * cols() + col] = 1;
}

std::optional<std::size_t> ProbabilityMatrix::find(const Dyad& d) const {
  const auto it = std::lower_bound(dyads_.begin(), dyads_.end(), d);
  if (it == dyads_.end() || !(*it == d)) return std::nullopt;
  return static_cast<std::size_t>(it - dyads_.begin());
}

ProbabilityMatrix build_probability_matrix(std::span<const MonthScores> scores,
                                           std::vector<YearMonth> months) {
  std::sort(months.begin(), months.end());
  months.erase(std::unique(months.begin(), months.end()), months.end());
  std::vector<const MonthScores*> cols;
  std::vector<Dyad> dyads;
  for (const auto& ym : months) {
    const auto it = std::find_if(scores.begin(), scores.end(),
                                 [&](const MonthScores& s) { return s.month == ym; });
    if (it == scores.end()) throw MissingMonth("no out-of-fold scores for month " + ym.str());
    cols.push_back(&*it);
    dyads.insert(dyads.end(), it->dyads.begin(), it->dyads.end());
  }
  std::sort(dyads.begin(), dyads.end());
  dyads.erase(std::unique(dyads.begin(), dyads.end()), dyads.end());

  ProbabilityMatrix pm(months, std::move(dyads));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t i = 0; i < cols[c]->dyads.size(); ++i) {
      pm.set(*pm.find(cols[c]->dyads[i]), c, cols[c]->probability[i]);
    }
  }
  return pm;
}

std::string_view direction_name(Direction d) { return d == Direction::Past ? "past" : "future"; }

std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "past") return Direction::Past;
  if (s == "future") return Direction::Future;
  return std::nullopt;
}

StackResult stack_columns(const learn::DenseMatrix& columns, std::span<const std::uint8_t> labels,
                          const StackConfig& cfg, std::uint64_t seed) {
  if (cfg.repeats < 1) throw ConfigError("stacking needs at least one repeat");
  StackResult res;
  res.rows = columns.rows();
  std::vector<double> single(columns.rows());
  for (std::size_t i = 0; i < columns.rows(); ++i) single[i] = columns(i, 0);

  double sum_single = 0.0, sum_stacked = 0.0;
  int count = 0;
  for (int r = 0; r < cfg.repeats; ++r) {
    Rng rng = Rng::stream(seed, StreamTag::Stack, static_cast<std::uint64_t>(r));
    const auto fold = learn::stratified_folds(labels, cfg.folds, rng);
    for (int f = 0; f < cfg.folds; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? test : train).push_back(i);
      std::vector<double> s_single, s_stacked;
      std::vector<std::uint8_t> y_test;
      for (auto i : test) {
        s_single.push_back(single[i]);
        y_test.push_back(labels[i]);
      }
      if (columns.cols() == 1) {
        s_stacked = s_single;
      } else {
        std::vector<std::uint8_t> y_train;
        for (auto i : train) y_train.push_back(labels[i]);
        const auto model = learn::LogisticModel::train(columns.select_rows(train), y_train,
                                                       cfg.logistic);
        s_stacked = model.predict_proba(columns.select_rows(test));
      }
      sum_single += learn::auroc(s_single, y_test);
      sum_stacked += learn::auroc(s_stacked, y_test);
      ++count;
    }
  }
  res.auroc_single = sum_single / count;
  res.auroc_stacked = sum_stacked / count;
  res.delta = res.auroc_stacked - res.auroc_single;
  return res;
}

StackResult stack(std::span<const MonthScores> scores, const YearMonth& target,
                  const StackConfig& cfg, std::uint64_t seed) {
  if (cfg.n < 0) throw ConfigError("stacking window n must be >= 0");
  const auto target_it = std::find_if(scores.begin(), scores.end(),
                                      [&](const MonthScores& s) { return s.month == target; });
  if (target_it == scores.end()) throw MissingMonth("no predictions for target month " + target.str());

  YearMonth first = target, last = target;
  for (const auto& s : scores) {
    first = std::min(first, s.month);
    last = std::max(last, s.month);
  }
  const int step = cfg.direction == Direction::Past ? -1 : 1;
  std::vector<YearMonth> months{target};
  for (int k = 1; k <= cfg.n; ++k) {
    const YearMonth ym = target.plus(step * k);
    if (ym < first || last < ym) {
      throw InsufficientHistory("stacking " + std::to_string(cfg.n) + " " +
                                std::string(direction_name(cfg.direction)) + " months from " +
                                target.str() + " needs " + ym.str() + ", outside the available " +
                                first.str() + ".." + last.str());
    }
    months.push_back(ym);
  }
  const ProbabilityMatrix pm = build_probability_matrix(scores, months);
  // build_probability_matrix sorts its columns; map them back to lag order.
  std::vector<std::size_t> col_of(months.size());
  for (std::size_t k = 0; k < months.size(); ++k) {
    col_of[k] = static_cast<std::size_t>(
        std::find(pm.months().begin(), pm.months().end(), months[k]) - pm.months().begin());
  }

  const MonthScores& t = *target_it;
  const std::size_t width = 1 + 2 * static_cast<std::size_t>(cfg.n);
  learn::DenseMatrix columns(t.dyads.size(), width);
  for (std::size_t i = 0; i < t.dyads.size(); ++i) {
    const std::size_t row = *pm.find(t.dyads[i]);
    columns(i, 0) = t.probability[i];
    for (int k = 1; k <= cfg.n; ++k) {
      const std::size_t c = col_of[k];
      columns(i, 2 * k - 1) = pm.at(row, c);
      columns(i, 2 * k) = pm.present(row, c) ? 0.0 : 1.0;
    }
  }
  StackResult res = stack_columns(columns, t.label, cfg, seed);
  res.target = target;
  res.n = cfg.n;
  res.direction = cfg.direction;
  return res;
}

void write_stacking_csv(std::ostream& out, std::span<const StackResult> rows) {
  out << "target_year,target_month,n,direction,auroc_single,auroc_stacked,delta\n";
  for (const auto& r : rows) {
    out << r.target.year << ',' << r.target.month << ',' << r.n << ','
        << direction_name(r.direction) << ',' << text::format_double(r.auroc_single) << ','
        << text::format_double(r.auroc_stacked) << ',' << text::format_double(r.delta) << '\n';
  }
}

}  // namespace tieinfer

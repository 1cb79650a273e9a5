#pragma once

// Multi-month fusion of per-month link probabilities.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tieinfer/core.hpp"
#include "tieinfer/learn/logistic.hpp"
#include "tieinfer/learn/matrix.hpp"

namespace tieinfer {

// Out-of-fold probabilities for one month's candidate dyads.
struct MonthScores {
  YearMonth month;
  std::vector<Dyad> dyads;  // ascending
  std::vector<double> probability;
  std::vector<std::uint8_t> predicted;
  std::vector<std::uint8_t> label;
};

// predictions.csv: user_a,user_b,year,month,probability,predicted,label
void write_predictions_csv(std::ostream& out, const MonthScores& s);
MonthScores read_predictions_csv(std::istream& in);
MonthScores read_predictions_file(const std::string& path);

class ProbabilityMatrix {
 public:
  ProbabilityMatrix(std::vector<YearMonth> months, std::vector<Dyad> dyads);

  const std::vector<YearMonth>& months() const noexcept { return months_; }
  const std::vector<Dyad>& dyads() const noexcept { return dyads_; }
  std::size_t rows() const noexcept { return dyads_.size(); }
  std::size_t cols() const noexcept { return months_.size(); }

  bool present(std::size_t row, std::size_t col) const { return present_[row * cols() + col]; }
  // 0 when missing.
  double at(std::size_t row, std::size_t col) const { return p_[row * cols() + col]; }
  void set(std::size_t row, std::size_t col, double p);
  std::optional<std::size_t> find(const Dyad& d) const;

 private:
  std::vector<YearMonth> months_;
  std::vector<Dyad> dyads_;
  std::vector<double> p_;
  std::vector<std::uint8_t> present_;
};

// Rows are the union of all months' dyads, columns the requested months in
// chronological order. Throws MissingMonth when a requested month has no
// scores.
ProbabilityMatrix build_probability_matrix(std::span<const MonthScores> scores,
                                           std::vector<YearMonth> months);

enum class Direction { Past, Future };
std::string_view direction_name(Direction d);
std::optional<Direction> parse_direction(std::string_view s);

struct StackConfig {
  int n = 2;
  Direction direction = Direction::Past;
  int folds = 5;
  int repeats = 5;
  learn::LogisticConfig logistic;
};

struct StackResult {
  YearMonth target;
  int n = 0;
  Direction direction = Direction::Past;
  std::size_t rows = 0;
  double auroc_single = 0.0;
  double auroc_stacked = 0.0;
  double delta = 0.0;
};

// Columns: the target month's probability, then per additional month its
// probability (missing as 0) and a missingness indicator. Throws
// InsufficientHistory / MissingMonth as documented in the ledger of months.
StackResult stack(std::span<const MonthScores> scores, const YearMonth& target,
                  const StackConfig& cfg, std::uint64_t seed);

// Core evaluation on prepared columns; column 0 is the single-month score.
// With one column the stacked score is column 0 itself.
StackResult stack_columns(const learn::DenseMatrix& columns, std::span<const std::uint8_t> labels,
                          const StackConfig& cfg, std::uint64_t seed);

void write_stacking_csv(std::ostream& out, std::span<const StackResult> rows);

}  // namespace tieinfer

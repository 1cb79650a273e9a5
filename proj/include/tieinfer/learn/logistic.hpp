#pragma once

// L2-regularized logistic regression fitted by plain gradient descent on
// z-scored features.

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tieinfer/learn/matrix.hpp"

namespace tieinfer::learn {

struct LogisticConfig {
  double l2 = 1e-3;
  int max_iter = 5000;
  double tol = 1e-6;  // on the Euclidean norm of the full gradient
  bool record_loss = false;
};

// Column means and standard deviations; a constant column gets scale 0 and
// standardizes to all zeros.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const DenseMatrix& x);
  DenseMatrix apply(const DenseMatrix& x) const;
  void apply(std::span<const double> row, std::span<double> out) const;
};

// Objective on standardized data:
//   mean_i log(1 + exp(-s_i m_i)) + l2/2 |w|^2,  m_i = z_i . w + b,
// with s_i = +1 for positives and -1 for negatives. The intercept is not
// penalized.
double logistic_objective(const DenseMatrix& z, std::span<const std::uint8_t> y,
                          std::span<const double> w, double b, double l2);
// Writes d/dw into grad_w and returns d/db.
double logistic_gradient(const DenseMatrix& z, std::span<const std::uint8_t> y,
                         std::span<const double> w, double b, double l2,
                         std::span<double> grad_w);

class LogisticModel {
 public:
  // Throws DegenerateLabels when y has a single class. Non-convergence is not
  // an error: converged() reports it.
  static LogisticModel train(const DenseMatrix& x, std::span<const std::uint8_t> y,
                             const LogisticConfig& cfg);

  double predict_proba(std::span<const double> row) const;
  std::vector<double> predict_proba(const DenseMatrix& x) const;

  // Weights apply to standardized features.
  const std::vector<double>& weights() const noexcept { return w_; }
  double intercept() const noexcept { return b_; }
  const Standardizer& standardizer() const noexcept { return std_; }
  const LogisticConfig& config() const noexcept { return cfg_; }

  bool converged() const noexcept { return converged_; }
  int iterations() const noexcept { return iterations_; }
  double gradient_norm() const noexcept { return grad_norm_; }
  double step_size() const noexcept { return step_; }
  const std::vector<double>& loss_history() const noexcept { return losses_; }

  nlohmann::json to_json() const;
  static LogisticModel from_json(const nlohmann::json& j);

 private:
  LogisticConfig cfg_;
  Standardizer std_;
  std::vector<double> w_;
  double b_ = 0.0;
  bool converged_ = false;
  int iterations_ = 0;
  double grad_norm_ = 0.0;
  double step_ = 0.0;
  std::vector<double> losses_;
};

}  // namespace tieinfer::learn

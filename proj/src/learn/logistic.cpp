#include "tieinfer/learn/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "tieinfer/errors.hpp"
#include "tieinfer/simd/kernels.hpp"

namespace tieinfer::learn {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Largest eigenvalue of the Gram matrix (1/n) [Z 1]^T [Z 1], by power
// iteration, capped by the trace.
double gram_spectral_bound(const DenseMatrix& z) {
  const std::size_t n = z.rows(), d = z.cols() + 1;
  std::vector<double> g(d * d, 0.0);
  std::vector<double> ext(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = z.row(i);
    std::copy(row.begin(), row.end(), ext.begin());
    ext[d - 1] = 1.0;
    for (std::size_t a = 0; a < d; ++a) {
      if (ext[a] == 0.0) continue;
      simd::axpy(ext[a], ext, std::span<double>(g).subspan(a * d, d));
    }
  }
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t c = 0; c < d; ++c) g[a * d + c] /= static_cast<double>(n);
    trace += g[a * d + a];
  }
  std::vector<double> v(d, 1.0), next(d);
  double estimate = 0.0;
  for (int it = 0; it < 200; ++it) {
    for (std::size_t a = 0; a < d; ++a) {
      next[a] = simd::dot(std::span<const double>(g).subspan(a * d, d), v);
    }
    const double norm = std::sqrt(simd::dot(next, next));
    if (norm == 0.0) break;
    estimate = norm / std::sqrt(simd::dot(v, v));
    for (std::size_t a = 0; a < d; ++a) v[a] = next[a] / norm;
  }
  return std::min(trace, 1.05 * estimate);
}

}  // namespace

Standardizer Standardizer::fit(const DenseMatrix& x) {
  Standardizer s;
  const std::size_t n = x.rows(), d = x.cols();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 0.0);
  if (n == 0) return s;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += x(i, j);
  }
  for (auto& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x(i, j) - s.mean[j];
      s.scale[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    bool constant = true;
    for (std::size_t i = 1; i < n && constant; ++i) constant = x(i, j) == x(0, j);
    s.scale[j] = constant ? 0.0 : std::sqrt(s.scale[j] / static_cast<double>(n));
  }
  return s;
}

void Standardizer::apply(std::span<const double> row, std::span<double> out) const {
  for (std::size_t j = 0; j < row.size(); ++j) {
    out[j] = scale[j] > 0.0 ? (row[j] - mean[j]) / scale[j] : 0.0;
  }
}

DenseMatrix Standardizer::apply(const DenseMatrix& x) const {
  DenseMatrix z(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) apply(x.row(i), z.row(i));
  return z;
}

double logistic_objective(const DenseMatrix& z, std::span<const std::uint8_t> y,
                          std::span<const double> w, double b, double l2) {
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const double m = simd::dot(z.row(i), w) + b;
    total += softplus(y[i] ? -m : m);
  }
  return total / static_cast<double>(z.rows()) + 0.5 * l2 * simd::dot(w, w);
}

double logistic_gradient(const DenseMatrix& z, std::span<const std::uint8_t> y,
                         std::span<const double> w, double b, double l2,
                         std::span<double> grad_w) {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  double grad_b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const double r = (sigmoid(simd::dot(z.row(i), w) + b) - (y[i] ? 1.0 : 0.0)) * inv_n;
    if (r == 0.0) continue;
    simd::axpy(r, z.row(i), grad_w);
    grad_b += r;
  }
  simd::axpy(l2, w, grad_w);
  return grad_b;
}

LogisticModel LogisticModel::train(const DenseMatrix& x, std::span<const std::uint8_t> y,
                                   const LogisticConfig& cfg) {
  std::size_t positives = 0;
  for (auto v : y) positives += v ? 1 : 0;
  if (positives == 0 || positives == y.size()) {
    throw DegenerateLabels("logistic regression needs both classes in the training labels");
  }
  if (cfg.l2 < 0.0 || cfg.max_iter < 0 || cfg.tol <= 0.0) {
    throw ConfigError("logistic config needs l2 >= 0, max_iter >= 0 and tol > 0");
  }

  LogisticModel m;
  m.cfg_ = cfg;
  m.std_ = Standardizer::fit(x);
  const DenseMatrix z = m.std_.apply(x);
  const std::size_t d = x.cols();
  m.w_.assign(d, 0.0);
  m.step_ = 1.0 / (0.25 * gram_spectral_bound(z) + cfg.l2);

  std::vector<double> grad(d);
  for (;;) {
    const double grad_b = logistic_gradient(z, y, m.w_, m.b_, cfg.l2, grad);
    if (cfg.record_loss) m.losses_.push_back(logistic_objective(z, y, m.w_, m.b_, cfg.l2));
    m.grad_norm_ = std::sqrt(simd::dot(grad, grad) + grad_b * grad_b);
    if (m.grad_norm_ < cfg.tol) {
      m.converged_ = true;
      break;
    }
    if (m.iterations_ >= cfg.max_iter) break;
    simd::axpy(-m.step_, grad, m.w_);
    m.b_ -= m.step_ * grad_b;
    ++m.iterations_;
  }
  return m;
}

double LogisticModel::predict_proba(std::span<const double> row) const {
  std::vector<double> z(row.size());
  std_.apply(row, z);
  return sigmoid(simd::dot(z, w_) + b_);
}

std::vector<double> LogisticModel::predict_proba(const DenseMatrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_proba(x.row(i));
  return out;
}

nlohmann::json LogisticModel::to_json() const {
  return {{"config",
           {{"l2", cfg_.l2}, {"max_iter", cfg_.max_iter}, {"tol", cfg_.tol}}},
          {"mean", std_.mean},
          {"scale", std_.scale},
          {"weights", w_},
          {"intercept", b_},
          {"converged", converged_},
          {"iterations", iterations_},
          {"gradient_norm", grad_norm_}};
}

LogisticModel LogisticModel::from_json(const nlohmann::json& j) {
  LogisticModel m;
  const auto& c = j.at("config");
  m.cfg_.l2 = c.at("l2").get<double>();
  m.cfg_.max_iter = c.at("max_iter").get<int>();
  m.cfg_.tol = c.at("tol").get<double>();
  m.std_.mean = j.at("mean").get<std::vector<double>>();
  m.std_.scale = j.at("scale").get<std::vector<double>>();
  m.w_ = j.at("weights").get<std::vector<double>>();
  m.b_ = j.at("intercept").get<double>();
  m.converged_ = j.at("converged").get<bool>();
  m.iterations_ = j.at("iterations").get<int>();
  m.grad_norm_ = j.at("gradient_norm").get<double>();
  return m;
}

}  // namespace tieinfer::learn

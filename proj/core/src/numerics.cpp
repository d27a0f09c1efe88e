// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "predbranch/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "predbranch/errors.hpp"
#include "predbranch/tolerances.hpp"

namespace predbranch {
namespace {

bool finite_span(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double log_sum_exp(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - top);
  return top + std::log(sum);
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                          std::to_string(b) + ")");
  }
}

}  // namespace

bool Vec::all_finite() const { return finite_span(values_); }

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw InvalidArgument("Mat: " + std::to_string(values_.size()) + " values for a " +
                          std::to_string(rows_) + "x" + std::to_string(cols_) + " matrix");
  }
}

void Mat::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

bool Mat::all_finite() const { return finite_span(values_); }

Vec matvec(const Mat& w, std::span<const double> x) {
  require_same_length(w.cols(), x.size(), "matvec");
  Vec y(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) y[r] = dot(w.row(r), x);
  return y;
}

Vec matvec_transposed(const Mat& w, std::span<const double> x) {
  Vec y(w.cols());
  add_matvec_transposed(y.span(), w, x);
  return y;
}

void add_outer(Mat& w, std::span<const double> a, std::span<const double> b, double scale) {
  require_same_length(w.rows(), a.size(), "add_outer rows");
  require_same_length(w.cols(), b.size(), "add_outer cols");
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double ar = scale * a[r];
    if (ar == 0.0) continue;
    auto row = w.row(r);
    for (std::size_t c = 0; c < w.cols(); ++c) row[c] += ar * b[c];
  }
}

void add_matvec_transposed(std::span<double> y, const Mat& w, std::span<const double> x, double scale) {
  require_same_length(w.rows(), x.size(), "matvec_transposed rows");
  require_same_length(w.cols(), y.size(), "matvec_transposed cols");
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double xr = scale * x[r];
    if (xr == 0.0) continue;
    auto row = w.row(r);
    for (std::size_t c = 0; c < w.cols(); ++c) y[c] += xr * row[c];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("argmax of an empty vector");
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

Vec softmax(const Vec& logits) {
  if (logits.empty()) throw InvalidArgument("softmax of an empty vector");
  const double top = *std::max_element(logits.begin(), logits.end());
  Vec out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double cross_entropy_logits(const Vec& logits, std::size_t target) {
  if (target >= logits.size()) {
    throw InvalidArgument("cross_entropy: target " + std::to_string(target) + " outside [0, " +
                          std::to_string(logits.size()) + ")");
  }
  // Clamp tiny negative roundoff from the log-sum-exp subtraction.
  return std::max(0.0, log_sum_exp(logits.span()) - logits[target]);
}

double cross_entropy_probs(const Vec& probs, std::size_t target) {
  if (target >= probs.size()) {
    throw InvalidArgument("cross_entropy: target " + std::to_string(target) + " outside [0, " +
                          std::to_string(probs.size()) + ")");
  }
  return -std::log(probs[target]);
}

double cross_entropy_logits_soft(const Vec& logits, std::span<const double> target) {
  require_same_length(logits.size(), target.size(), "cross_entropy_soft");
  if (logits.empty()) throw InvalidArgument("cross_entropy of an empty vector");
  const double lse = log_sum_exp(logits.span());
  double loss = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (target[j] != 0.0) loss += target[j] * (lse - logits[j]);
  }
  return loss;
}

Mat& GradTape::slot(const std::string& id, std::size_t rows, std::size_t cols) {
  auto [it, inserted] = grads_.try_emplace(id, rows, cols);
  if (!inserted && (it->second.rows() != rows || it->second.cols() != cols)) {
    throw InvalidArgument("GradTape: shape mismatch for '" + id + "'");
  }
  return it->second;
}

void GradTape::accumulate(const std::string& id, const Mat& grad) {
  Mat& dst = slot(id, grad.rows(), grad.cols());
  auto out = dst.span();
  auto in = grad.span();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
}

const Mat* GradTape::find(const std::string& id) const {
  auto it = grads_.find(id);
  return it == grads_.end() ? nullptr : &it->second;
}

std::vector<std::string> GradTape::ids() const {
  std::vector<std::string> out;
  out.reserve(grads_.size());
  for (const auto& [id, _] : grads_) out.push_back(id);
  return out;
}

void GradTape::scale(double factor) {
  for (auto& [_, g] : grads_) {
    for (double& v : g.span()) v *= factor;
  }
}

void GradTape::zero() {
  for (auto& [_, g] : grads_) g.fill(0.0);
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr, double momentum,
              std::span<double> velocity) {
  require_same_length(params.size(), grads.size(), "sgd_step");
  if (lr < 0.0) throw InvalidArgument("sgd_step: negative learning rate");
  if (momentum == 0.0) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
    return;
  }
  require_same_length(params.size(), velocity.size(), "sgd_step velocity");
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grads[i];
    params[i] -= lr * velocity[i];
  }
}

void SgdOptimizer::step(std::span<const ParamRef> params, const GradTape& grads, double lr) {
  for (const ParamRef& p : params) {
    const Mat* g = grads.find(p.id);
    if (g == nullptr) continue;
    if (!g->same_shape(*p.value)) throw InvalidArgument("SgdOptimizer: shape mismatch for '" + p.id + "'");
    std::span<double> velocity;
    if (momentum_ != 0.0) {
      velocity = velocity_.try_emplace(p.id, p.value->rows(), p.value->cols()).first->second.span();
    }
    sgd_step(p.value->span(), g->span(), lr, momentum_, velocity);
  }
}

GradCheckResult grad_check(const LossFunction& loss, std::span<const ParamRef> params, double step) {
  if (!(step > 0.0)) throw InvalidArgument("grad_check: step must be positive");
  GradTape tape;
  const double base = loss(&tape);
  if (!std::isfinite(base)) throw NumericalFailure("grad_check: non-finite loss at the base point");

  GradCheckResult result;
  for (const ParamRef& p : params) {
    const Mat* analytic = tape.find(p.id);
    if (analytic != nullptr && !analytic->same_shape(*p.value)) {
      throw InvalidArgument("grad_check: gradient shape mismatch for '" + p.id + "'");
    }
    auto values = p.value->span();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double plus = loss(nullptr);
      values[i] = saved - step;
      const double minus = loss(nullptr);
      values[i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericalFailure("grad_check: non-finite loss while probing " + p.id + "[" +
                               std::to_string(i) + "]");
      }
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic ? analytic->span()[i] : 0.0;
      const double denom = std::max(tol::kGradCheckDenominatorFloor, std::abs(a) + std::abs(numeric));
      const double err = std::abs(a - numeric) / denom;
      ++result.coordinates;
      if (result.worst_param.empty() || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = p.id;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace predbranch

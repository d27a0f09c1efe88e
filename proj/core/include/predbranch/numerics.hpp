// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense vectors and matrices in binary64, the softmax/cross-entropy pair,
// plain and momentum SGD, and a central-difference gradient checker.

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace predbranch {

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  Vec(std::initializer_list<double> values) : values_(values) {}
  explicit Vec(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool all_finite() const;

  friend bool operator==(const Vec&, const Vec&) = default;

 private:
  std::vector<double> values_;
};

/// Row-major dense matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  void fill(double value);
  bool all_finite() const;
  bool same_shape(const Mat& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// --- dense kernels -------------------------------------------------------

/// y = W x
Vec matvec(const Mat& w, std::span<const double> x);
/// y = Wᵀ x
Vec matvec_transposed(const Mat& w, std::span<const double> x);
/// W += scale · a bᵀ
void add_outer(Mat& w, std::span<const double> a, std::span<const double> b, double scale = 1.0);
/// y += scale · Wᵀ x
void add_matvec_transposed(std::span<double> y, const Mat& w, std::span<const double> x, double scale = 1.0);
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double distance(std::span<const double> a, std::span<const double> b);
std::size_t argmax(std::span<const double> v);

// --- softmax / cross-entropy ---------------------------------------------

/// Max-shifted softmax. Throws InvalidArgument on an empty input.
Vec softmax(const Vec& logits);

/// −ln softmax(logits)[target], computed with log-sum-exp.
double cross_entropy_logits(const Vec& logits, std::size_t target);

/// −ln probs[target] for a vector that is already a distribution.
/// Use this for CE(p, g) on softmax outputs; never feed it logits.
double cross_entropy_probs(const Vec& probs, std::size_t target);

/// Cross-entropy of softmax(logits) against an arbitrary target
/// distribution: −Σ q_j ln softmax(logits)_j.
double cross_entropy_logits_soft(const Vec& logits, std::span<const double> target);

// --- gradients -----------------------------------------------------------

/// Named parameter handle; the pointee must outlive the handle.
struct ParamRef {
  std::string id;
  Mat* value = nullptr;
};

/// Additive gradient accumulator keyed by parameter id.
class GradTape {
 public:
  /// Zero-initialised slot for `id`; an existing slot must have the same shape.
  Mat& slot(const std::string& id, std::size_t rows, std::size_t cols);
  void accumulate(const std::string& id, const Mat& grad);

  const Mat* find(const std::string& id) const;
  bool contains(const std::string& id) const { return grads_.count(id) != 0; }
  std::vector<std::string> ids() const;

  void scale(double factor);
  void zero();
  void clear() { grads_.clear(); }

 private:
  std::map<std::string, Mat> grads_;
};

/// In-place SGD update. With momentum 0: p ← p − lr·g. Otherwise the
/// velocity recurrence v ← μv + g, p ← p − lr·v.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr, double momentum,
              std::span<double> velocity);

/// Stateful SGD over a set of named parameters.
class SgdOptimizer {
 public:
  explicit SgdOptimizer(double momentum = 0.0) : momentum_(momentum) {}

  /// Parameters absent from the tape are left untouched.
  void step(std::span<const ParamRef> params, const GradTape& grads, double lr);
  double momentum() const { return momentum_; }

 private:
  double momentum_;
  std::map<std::string, Mat> velocity_;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Loss callback. When `tape` is non-null the callback must also accumulate
/// its analytic gradient into it.
using LossFunction = std::function<double(GradTape* tape)>;

/// Compares the analytic gradient against central differences over every
/// coordinate of `params`. Error per coordinate is
/// |analytic − numeric| / max(floor, |analytic| + |numeric|).
/// Throws NumericalFailure if the loss is non-finite at any probe.
GradCheckResult grad_check(const LossFunction& loss, std::span<const ParamRef> params, double step);

}  // namespace predbranch

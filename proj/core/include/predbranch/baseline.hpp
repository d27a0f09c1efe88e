// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0
//
// The conventional all-class relation predictor
//   p = softmax(W_e e + W_u u + z)
// with z added unprojected, its pretraining, and the per-class statistics
// that seed label clustering and memory initialisation.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "predbranch/config.hpp"
#include "predbranch/numerics.hpp"
#include "predbranch/synthdata.hpp"

namespace predbranch {

struct BaselineParams {
  Mat W_e;  // A x P
  Mat W_u;  // A x P

  std::size_t num_classes() const { return W_e.rows(); }
  std::size_t feature_dim() const { return W_e.cols(); }
  std::vector<ParamRef> parameters();
  friend bool operator==(const BaselineParams&, const BaselineParams&) = default;
};

/// Uniform in [−1/√P, 1/√P] from a stream derived from `seed`.
BaselineParams init_baseline(int num_classes, int feature_dim, std::uint64_t seed);

Vec baseline_logits(const RelationSample& s, const BaselineParams& p);
Vec baseline_forward(const RelationSample& s, const BaselineParams& p);

/// CE(W_e e + W_u u + z, g); accumulates "baseline.W_e" / "baseline.W_u"
/// gradients scaled by `weight` when `tape` is given.
double baseline_loss(const RelationSample& s, const BaselineParams& p, GradTape* tape, double weight = 1.0);

/// Mini-batch SGD on the train split for cfg.effective_pretrain_iters()
/// steps under the warmup schedule. `loss_trace`, when given, receives the
/// mean batch loss of every step.
BaselineParams pretrain_baseline(const Dataset& ds, const TrainConfig& cfg,
                                 std::vector<double>* loss_trace = nullptr);

struct ClassStats {
  Mat avg_prob;  // A x A: row i = mean baseline prediction over class-i train samples
  Mat avg_e;     // A x P
  Mat avg_u;     // A x P
  std::vector<int> support;
  std::vector<std::string> warnings;

  std::size_t num_classes() const { return support.size(); }
  friend bool operator==(const ClassStats&, const ClassStats&) = default;
};

/// Zero-support classes get a uniform avg_prob row, zero feature rows and
/// a warning.
ClassStats class_statistics(const Dataset& ds, const BaselineParams& p);

double accuracy(const std::vector<RelationSample>& samples, const BaselineParams& p);

}  // namespace predbranch

// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference verification of every differentiable operation on a
// randomized small instance.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "predbranch/branching.hpp"
#include "predbranch/numerics.hpp"

namespace predbranch {

struct GradSuiteOptions {
  int feature_dim = 8;  // P
  int num_classes = 6;  // A
  int group_size = 3;   // |first group|
  double step = 1e-5;
};

struct GradSuiteCase {
  std::string name;
  GradCheckResult result;
};

/// A random two-group predictor with knowledge transfer and a random
/// sample, both drawn from `seed`.
struct GradInstance {
  PredictorParams params;
  RelationSample sample;
};

GradInstance random_grad_instance(std::uint64_t seed, const GradSuiteOptions& opts = {});

/// Cases: baseline loss; transfer composition (full memory and a subset);
/// memory loss; relation loss of the root and of the covering group
/// head; total loss with full gradient flow; total loss under the default
/// routing, excluding the memories, whose update follows the memory loss.
std::vector<GradSuiteCase> run_grad_suite(std::uint64_t seed, const GradSuiteOptions& opts = {});

}  // namespace predbranch

// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Knowledge transfer from a class memory V (one row per class):
//
//   p̂  = softmax(C x)                   coefficient, C a linear projector
//   k  = V_Sᵀ p̂                         V_S = rows of V indexed by S
//   a  = max(tanh(x + k), 0)            componentwise gate
//   x′ = α · max(p̂) · (x + a ⊙ k)       scale-calibrated enhancement
//
// and the memory loss
//
//   L_mem = ‖x − v_g‖² + γ · max(M − (1/A) Σ_{i≠g} ‖x − v_i‖, 0).
//
// The mean in L_mem divides by A although it sums A−1 distances; this is
// intentional and matches the published form.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "predbranch/baseline.hpp"
#include "predbranch/config.hpp"
#include "predbranch/numerics.hpp"

namespace predbranch {

enum class Stream { kContext, kUnion };  // e, u

struct Memory {
  Mat V;  // A x P
  bool trainable = true;
  friend bool operator==(const Memory&, const Memory&) = default;
};

struct CoefficientProjector {
  Mat W;  // c x P
  friend bool operator==(const CoefficientProjector&, const CoefficientProjector&) = default;
};

/// Row i of V is the class-i mean of the chosen stream.
Memory init_memory(const ClassStats& stats, Stream stream);

/// softmax(W x).
Vec compute_coefficient(const Vec& x, const CoefficientProjector& proj);

/// (V_S)ᵀ coef where S is `subset` (sorted, strictly increasing) or every
/// row when `subset` is empty.
Vec compute_knowledge(const Memory& mem, const Vec& coef, std::span<const int> subset = {});

Vec attention_gate(const Vec& x, const Vec& y);

struct Enhancement {
  Vec feature;   // x′
  double scale;  // m = max(p̂)
};

Enhancement enhance_feature(const Vec& x, const Vec& k, const Vec& coef, const KTConfig& cfg);

double memory_loss(const Vec& x, const Memory& mem, int g, const KTConfig& cfg);

/// Adds weight · ∂L_mem/∂x into `dx` (if non-empty) and
/// weight · ∂L_mem/∂V into `dV` (if non-null).
void memory_loss_backward(const Vec& x, const Memory& mem, int g, const KTConfig& cfg, double weight,
                          std::span<double> dx, Mat* dV);

/// Every intermediate of one stream's transfer, kept for the backward pass.
struct TransferTrace {
  Vec coef_logits;  // C x
  Vec coef;         // p̂
  Vec knowledge;    // k
  Vec gate;         // a
  Vec enhanced;     // x′
  double scale = 0.0;
  std::size_t scale_index = 0;  // argmax of p̂ (first on ties)
};

/// Full pipeline coefficient → knowledge → gate → enhancement for one
/// stream. `rows` selects memory rows as in compute_knowledge.
TransferTrace transfer_forward(const Vec& x, const Mat& coef_W, const Mat& V, std::span<const int> rows,
                               const KTConfig& cfg);

struct TransferGrads {
  Mat* coef_W = nullptr;  // ∂/∂C, accumulated when non-null
  Mat* V = nullptr;       // ∂/∂V (full A x P), accumulated when non-null
  std::span<double> x;    // ∂/∂x, accumulated when non-empty
};

/// Back-propagates ∂L/∂x′ (`d_enhanced`) plus an extra ∂L/∂(C x) term
/// (`d_coef_logits`, e.g. from a coefficient cross-entropy; may be empty).
void transfer_backward(const TransferTrace& trace, const Vec& x, const Mat& coef_W, const Mat& V,
                       std::span<const int> rows, const KTConfig& cfg, std::span<const double> d_enhanced,
                       std::span<const double> d_coef_logits, const TransferGrads& grads);

}  // namespace predbranch

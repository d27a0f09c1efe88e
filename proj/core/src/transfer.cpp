// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "predbranch/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "predbranch/errors.hpp"

namespace predbranch {
namespace {

void check_rows(const Mat& V, std::span<const int> rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= V.rows()) {
      throw InvalidArgument("memory subset index " + std::to_string(rows[i]) + " out of range");
    }
    if (i > 0 && rows[i] <= rows[i - 1]) throw InvalidArgument("memory subset must be strictly increasing");
  }
}

std::size_t row_of(std::span<const int> rows, std::size_t j) {
  return rows.empty() ? j : static_cast<std::size_t>(rows[j]);
}

std::size_t selected_count(const Mat& V, std::span<const int> rows) { return rows.empty() ? V.rows() : rows.size(); }

Vec knowledge_from(const Mat& V, const Vec& coef, std::span<const int> rows) {
  check_rows(V, rows);
  if (coef.size() != selected_count(V, rows)) {
    throw InvalidArgument("compute_knowledge: coefficient has " + std::to_string(coef.size()) + " entries for " +
                          std::to_string(selected_count(V, rows)) + " memory rows");
  }
  Vec k(V.cols());
  for (std::size_t j = 0; j < coef.size(); ++j) {
    const auto vrow = V.row(row_of(rows, j));
    for (std::size_t i = 0; i < k.size(); ++i) k[i] += coef[j] * vrow[i];
  }
  return k;
}

}  // namespace

Memory init_memory(const ClassStats& stats, Stream stream) {
  return Memory{stream == Stream::kContext ? stats.avg_e : stats.avg_u, true};
}

Vec compute_coefficient(const Vec& x, const CoefficientProjector& proj) {
  if (proj.W.cols() != x.size()) throw InvalidArgument("compute_coefficient: projector/feature dimension mismatch");
  return softmax(matvec(proj.W, x.span()));
}

Vec compute_knowledge(const Memory& mem, const Vec& coef, std::span<const int> subset) {
  return knowledge_from(mem.V, coef, subset);
}

Vec attention_gate(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw InvalidArgument("attention_gate: dimension mismatch");
  Vec a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = std::max(std::tanh(x[i] + y[i]), 0.0);
  return a;
}

Enhancement enhance_feature(const Vec& x, const Vec& k, const Vec& coef, const KTConfig& cfg) {
  const Vec a = attention_gate(x, k);
  if (coef.empty()) throw InvalidArgument("enhance_feature: empty coefficient");
  const double m = *std::max_element(coef.begin(), coef.end());
  Enhancement out{Vec(x.size()), m};
  for (std::size_t i = 0; i < x.size(); ++i) out.feature[i] = cfg.alpha * m * (x[i] + a[i] * k[i]);
  return out;
}

double memory_loss(const Vec& x, const Memory& mem, int g, const KTConfig& cfg) {
  const std::size_t A = mem.V.rows();
  if (g < 0 || static_cast<std::size_t>(g) >= A) {
    throw InvalidArgument("memory_loss: label " + std::to_string(g) + " outside [0, " + std::to_string(A) + ")");
  }
  if (mem.V.cols() != x.size()) throw InvalidArgument("memory_loss: feature/memory dimension mismatch");
  const auto gi = static_cast<std::size_t>(g);
  const double pull = squared_distance(x.span(), mem.V.row(gi));
  double spread = 0.0;
  for (std::size_t i = 0; i < A; ++i) {
    if (i != gi) spread += distance(x.span(), mem.V.row(i));
  }
  return pull + cfg.gamma * std::max(cfg.margin - spread / static_cast<double>(A), 0.0);
}

void memory_loss_backward(const Vec& x, const Memory& mem, int g, const KTConfig& cfg, double weight,
                          std::span<double> dx, Mat* dV) {
  const std::size_t A = mem.V.rows();
  const std::size_t P = x.size();
  if (g < 0 || static_cast<std::size_t>(g) >= A) throw InvalidArgument("memory_loss: label out of range");
  const auto gi = static_cast<std::size_t>(g);
  if (!dx.empty() && dx.size() != P) throw InvalidArgument("memory_loss_backward: dx has the wrong length");
  if (dV != nullptr && !dV->same_shape(mem.V)) throw InvalidArgument("memory_loss_backward: dV has the wrong shape");

  const auto vg = mem.V.row(gi);
  for (std::size_t j = 0; j < P; ++j) {
    const double d = 2.0 * weight * (x[j] - vg[j]);
    if (!dx.empty()) dx[j] += d;
    if (dV != nullptr) (*dV)(gi, j) -= d;
  }

  std::vector<double> dists(A, 0.0);
  double spread = 0.0;
  for (std::size_t i = 0; i < A; ++i) {
    if (i == gi) continue;
    dists[i] = distance(x.span(), mem.V.row(i));
    spread += dists[i];
  }
  if (!(cfg.margin - spread / static_cast<double>(A) > 0.0) || cfg.gamma == 0.0) return;
  const double coeff = weight * cfg.gamma / static_cast<double>(A);
  for (std::size_t i = 0; i < A; ++i) {
    if (i == gi || dists[i] == 0.0) continue;
    const auto vi = mem.V.row(i);
    for (std::size_t j = 0; j < P; ++j) {
      const double unit = (x[j] - vi[j]) / dists[i];
      if (!dx.empty()) dx[j] -= coeff * unit;
      if (dV != nullptr) (*dV)(i, j) += coeff * unit;
    }
  }
}

TransferTrace transfer_forward(const Vec& x, const Mat& coef_W, const Mat& V, std::span<const int> rows,
                               const KTConfig& cfg) {
  if (coef_W.cols() != x.size() || V.cols() != x.size()) throw InvalidArgument("transfer: feature dimension mismatch");
  TransferTrace t;
  t.coef_logits = matvec(coef_W, x.span());
  t.coef = softmax(t.coef_logits);
  t.knowledge = knowledge_from(V, t.coef, rows);
  t.gate = attention_gate(x, t.knowledge);
  t.scale_index = argmax(t.coef.span());
  t.scale = t.coef[t.scale_index];
  t.enhanced = Vec(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    t.enhanced[i] = cfg.alpha * t.scale * (x[i] + t.gate[i] * t.knowledge[i]);
  }
  return t;
}

void transfer_backward(const TransferTrace& t, const Vec& x, const Mat& coef_W, const Mat& V,
                       std::span<const int> rows, const KTConfig& cfg, std::span<const double> d_enhanced,
                       std::span<const double> d_coef_logits, const TransferGrads& grads) {
  const std::size_t P = x.size();
  const std::size_t c = t.coef.size();
  // x′ = α m h,  h = x + a ⊙ k
  double d_scale = 0.0;
  Vec d_h(P);
  for (std::size_t i = 0; i < P; ++i) {
    const double h = x[i] + t.gate[i] * t.knowledge[i];
    d_scale += cfg.alpha * d_enhanced[i] * h;
    d_h[i] = cfg.alpha * t.scale * d_enhanced[i];
  }
  // a = max(tanh(x + k), 0); the gate is flat wherever it is clipped.
  Vec d_k(P);
  Vec d_pre(P);  // ∂/∂(x + k) through the gate
  for (std::size_t i = 0; i < P; ++i) {
    d_k[i] = d_h[i] * t.gate[i];
    if (t.gate[i] > 0.0) d_pre[i] = d_h[i] * t.knowledge[i] * (1.0 - t.gate[i] * t.gate[i]);
    d_k[i] += d_pre[i];
  }
  // k = V_Sᵀ p̂,  m = p̂[argmax]
  Vec d_coef(c);
  for (std::size_t j = 0; j < c; ++j) {
    const std::size_t r = row_of(rows, j);
    d_coef[j] = dot(V.row(r), d_k.span());
    if (grads.V != nullptr) {
      auto dv = grads.V->row(r);
      for (std::size_t i = 0; i < P; ++i) dv[i] += t.coef[j] * d_k[i];
    }
  }
  d_coef[t.scale_index] += d_scale;
  // p̂ = softmax(s)
  const double inner = dot(d_coef.span(), t.coef.span());
  Vec d_s(c);
  for (std::size_t j = 0; j < c; ++j) d_s[j] = t.coef[j] * (d_coef[j] - inner);
  if (!d_coef_logits.empty()) {
    for (std::size_t j = 0; j < c; ++j) d_s[j] += d_coef_logits[j];
  }
  if (grads.coef_W != nullptr) add_outer(*grads.coef_W, d_s.span(), x.span());
  if (!grads.x.empty()) {
    for (std::size_t i = 0; i < P; ++i) grads.x[i] += d_h[i] + d_pre[i];
    add_matvec_transposed(grads.x, coef_W, d_s.span());
  }
}

}  // namespace predbranch

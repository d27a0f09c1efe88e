// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "predbranch/errors.hpp"
#include "predbranch/random.hpp"
#include "predbranch/tolerances.hpp"
#include "predbranch/transfer.hpp"

namespace predbranch {
namespace {

Vec random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

TEST(InitMemory, RowsAreClassAverages) {
  ClassStats st{Mat(3, 3), Mat(3, 2, std::vector<double>{1, 2, 3, 4, 0, 0}), Mat(3, 2, 7.0), {1, 5, 0}, {}};
  const Memory me = init_memory(st, Stream::kContext);
  const Memory mu = init_memory(st, Stream::kUnion);
  EXPECT_EQ(me.V, st.avg_e);
  EXPECT_EQ(mu.V, st.avg_u);
  EXPECT_EQ(me.V(2, 0), 0.0);  // zero-support row
  EXPECT_TRUE(me.V.all_finite());
}

TEST(Coefficient, Examples) {
  const Vec x{1.0, -2.0};
  for (double v : compute_coefficient(x, CoefficientProjector{Mat(4, 2)})) EXPECT_DOUBLE_EQ(v, 0.25);
  const Vec c = compute_coefficient(Vec{1.0, 0.0}, CoefficientProjector{Mat(2, 2, std::vector<double>{std::log(3.0), 0, 0, 0})});
  EXPECT_NEAR(c[0], 0.75, 1e-15);
  EXPECT_NEAR(c[1], 0.25, 1e-15);
  Rng rng(1);
  CoefficientProjector p{Mat(5, 3)};
  for (double& v : p.W.span()) v = rng.normal();
  const Vec y = random_vec(rng, 3);
  const Vec a = compute_coefficient(y, p);
  const Vec b = softmax(matvec(p.W, y.span()));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
  EXPECT_THROW(compute_coefficient(Vec{1.0}, p), InvalidArgument);
}

TEST(Knowledge, Examples) {
  const Memory id{Mat(2, 2, std::vector<double>{1, 0, 0, 1}), true};
  const Vec k = compute_knowledge(id, Vec{0.5, 0.5});
  EXPECT_DOUBLE_EQ(k[0], 0.5);
  EXPECT_DOUBLE_EQ(k[1], 0.5);

  const Memory m3{Mat(3, 2, std::vector<double>{1, 0, 5, 5, 0, 1}), true};
  const std::vector<int> subset{0, 2};
  const Vec ks = compute_knowledge(m3, Vec{0.25, 0.75}, subset);
  EXPECT_DOUBLE_EQ(ks[0], 0.25);
  EXPECT_DOUBLE_EQ(ks[1], 0.75);

  const Vec one_hot = compute_knowledge(m3, Vec{0.0, 1.0, 0.0});
  EXPECT_EQ(one_hot, (Vec{5.0, 5.0}));

  const std::vector<int> bad{0, 3};
  EXPECT_THROW(compute_knowledge(m3, Vec{0.5, 0.5}, bad), InvalidArgument);
  const std::vector<int> unsorted{2, 0};
  EXPECT_THROW(compute_knowledge(m3, Vec{0.5, 0.5}, unsorted), InvalidArgument);
  EXPECT_THROW(compute_knowledge(m3, Vec{0.5, 0.5}), InvalidArgument);
}

TEST(Knowledge, InsideConvexHullOfSelectedRows) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    Memory m{Mat(6, 4), true};
    for (double& v : m.V.span()) v = rng.normal();
    const std::vector<int> rows{1, 3, 4};
    const Vec coef = softmax(random_vec(rng, 3, 2.0));
    const Vec k = compute_knowledge(m, coef, rows);
    for (std::size_t i = 0; i < 4; ++i) {
      double lo = 1e300, hi = -1e300;
      for (int r : rows) {
        lo = std::min(lo, m.V(static_cast<std::size_t>(r), i));
        hi = std::max(hi, m.V(static_cast<std::size_t>(r), i));
      }
      EXPECT_GE(k[i], lo - 1e-12);
      EXPECT_LE(k[i], hi + 1e-12);
    }
  }
}

TEST(Gate, Examples) {
  EXPECT_EQ(attention_gate(Vec{1.0, -2.0}, Vec{-1.0, 2.0}), (Vec{0.0, 0.0}));
  EXPECT_EQ(attention_gate(Vec{-0.5}, Vec{-0.5}), (Vec{0.0}));
  EXPECT_NEAR(attention_gate(Vec{0.25}, Vec{0.75})[0], 0.761594, 1e-6);
  EXPECT_THROW(attention_gate(Vec{1.0}, Vec{1.0, 2.0}), InvalidArgument);
}

TEST(Gate, RangeForFiniteInputs) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec x = random_vec(rng, 5, 10.0), y = random_vec(rng, 5, 10.0);
    const Vec a = attention_gate(x, y);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_GE(a[i], 0.0);
      // tanh rounds to exactly 1 in binary64 once its argument passes ~19.
      if (std::abs(x[i] + y[i]) < 15.0) {
        EXPECT_LT(a[i], 1.0);
      } else {
        EXPECT_LE(a[i], 1.0);
      }
    }
  }
}

TEST(Enhance, Examples) {
  const KTConfig kt;
  const auto a = enhance_feature(Vec{1.0, -2.0}, Vec{0.0, 0.0}, Vec{0.0, 1.0, 0.0}, kt);
  EXPECT_EQ(a.feature, (Vec{10.0, -20.0}));
  EXPECT_EQ(a.scale, 1.0);

  const auto b = enhance_feature(Vec{1.0}, Vec{1.0}, Vec{0.5, 0.5}, kt);
  EXPECT_NEAR(b.feature[0], 10.0 * 0.5 * (1.0 + std::tanh(2.0)), 1e-12);
  EXPECT_NEAR(b.feature[0], 9.820, 1e-3);
  EXPECT_EQ(b.scale, 0.5);
}

TEST(Enhance, ScaleIsLinearInM) {
  const KTConfig kt;
  const Vec x{0.3, -0.7, 1.1}, k{0.2, 0.4, -0.1};
  const auto lo = enhance_feature(x, k, Vec{0.4, 0.3, 0.3}, kt);
  const auto hi = enhance_feature(x, k, Vec{0.8, 0.1, 0.1}, kt);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(hi.feature[i], 2.0 * lo.feature[i], 1e-12);
}

TEST(Enhance, IdentityWhenScaleOneAndNoKnowledge) {
  KTConfig kt;
  kt.alpha = 2.0;
  Rng rng(4);
  const Vec x = random_vec(rng, 6);
  const auto r = enhance_feature(x, Vec(6), Vec{0.5, 0.25, 0.25}, kt);  // α·m = 1
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(r.feature[i], x[i], 1e-15);
}

TEST(MemoryLoss, Examples) {
  KTConfig kt;
  // x = v_g, mean distance to the rest far beyond the margin.
  Memory far{Mat(3, 1, std::vector<double>{0.0, 500.0, -500.0}), true};
  EXPECT_EQ(memory_loss(Vec{0.0}, far, 0, kt), 0.0);

  Memory two{Mat(2, 1, std::vector<double>{0.0, 100.0}), true};
  EXPECT_NEAR(memory_loss(Vec{0.0}, two, 0, kt), 0.3, tol::kClosedFormLoss);

  Memory m{Mat(2, 2, std::vector<double>{1.0, 1.0, 1000.0, 0.0}), true};
  const Vec x{0.0, 0.5};
  EXPECT_DOUBLE_EQ(memory_loss(x, m, 0, kt), 1.25);

  EXPECT_THROW(memory_loss(x, m, 2, kt), InvalidArgument);
  EXPECT_THROW(memory_loss(x, m, -1, kt), InvalidArgument);
}

TEST(MemoryLoss, MatchesOracleAndNonNegative) {
  Rng rng(5);
  const KTConfig kt;
  for (int trial = 0; trial < 200; ++trial) {
    Memory m{Mat(5, 3), true};
    for (double& v : m.V.span()) v = 30.0 * rng.normal();
    const Vec x = random_vec(rng, 3, 30.0);
    const int g = static_cast<int>(rng.uniform_index(5));
    const double l = memory_loss(x, m, g, kt);
    EXPECT_GE(l, 0.0);
    EXPECT_NEAR(l, oracle::memory_loss(x.values(), m.V, g, kt.gamma, kt.margin), 1e-9 * (1.0 + l));
  }
}

TEST(MemoryLoss, ZeroGradientAtOwnRowWhenPushClipped) {
  const KTConfig kt;
  Memory m{Mat(3, 2, std::vector<double>{1.0, 2.0, 400.0, 0.0, 0.0, -400.0}), true};
  const Vec x{1.0, 2.0};
  std::vector<double> dx(2, 0.0);
  Mat dV(3, 2);
  memory_loss_backward(x, m, 0, kt, 1.0, dx, &dV);
  EXPECT_EQ(dx, (std::vector<double>{0.0, 0.0}));
  for (double v : dV.span()) EXPECT_EQ(v, 0.0);
}

TEST(Transfer, GradientsPassFiniteDifferences) {
  Rng rng(6);
  const KTConfig kt;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t P = 5, A = 4;
    std::vector<int> rows;
    if (trial % 2 == 1) rows = {0, 2, 3};
    const std::size_t c = rows.empty() ? A : rows.size();
    Mat x(1, P), C(c, P), V(A, P);
    for (double& v : x.span()) v = rng.normal();
    for (double& v : C.span()) v = 0.5 * rng.normal();
    for (double& v : V.span()) v = rng.normal();
    const Vec r = random_vec(rng, P);
    auto loss = [&](GradTape* tape) {
      const Vec xv(std::vector<double>(x.span().begin(), x.span().end()));
      const TransferTrace tr = transfer_forward(xv, C, V, rows, kt);
      if (tape != nullptr) {
        TransferGrads g{&tape->slot("C", c, P), &tape->slot("V", A, P), tape->slot("x", 1, P).span()};
        transfer_backward(tr, xv, C, V, rows, kt, r.span(), {}, g);
      }
      return dot(r.span(), tr.enhanced.span());
    };
    std::vector<ParamRef> refs{{"x", &x}, {"C", &C}, {"V", &V}};
    EXPECT_LE(grad_check(loss, refs, tol::kGradCheckStep).max_rel_error, tol::kGradCheckMaxRelError);
  }
}

TEST(Transfer, ForwardMatchesComposition) {
  Rng rng(7);
  const KTConfig kt;
  Mat C(3, 4), V(5, 4);
  for (double& v : C.span()) v = rng.normal();
  for (double& v : V.span()) v = rng.normal();
  const Vec x = random_vec(rng, 4);
  const std::vector<int> rows{0, 1, 4};
  const TransferTrace tr = transfer_forward(x, C, V, rows, kt);
  const Vec coef = compute_coefficient(x, CoefficientProjector{C});
  const Vec k = compute_knowledge(Memory{V, true}, coef, rows);
  const Enhancement en = enhance_feature(x, k, coef, kt);
  EXPECT_EQ(tr.coef, coef);
  EXPECT_EQ(tr.knowledge, k);
  EXPECT_EQ(tr.enhanced, en.feature);
  EXPECT_EQ(tr.scale, en.scale);
  const auto o = oracle::enhance(x.values(), C, V, rows, kt.alpha);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(tr.enhanced[i], o.enhanced[i], tol::kForwardOracle);
}

TEST(KTConfig, Validation) {
  KTConfig kt;
  EXPECT_NO_THROW(kt.validate());
  kt.alpha = 0.0;
  EXPECT_THROW(kt.validate(), InvalidArgument);
  kt = KTConfig{};
  kt.gamma = -1.0;
  EXPECT_THROW(kt.validate(), InvalidArgument);
  kt = KTConfig{};
  kt.margin = -1.0;
  EXPECT_THROW(kt.validate(), InvalidArgument);
  kt = KTConfig{};
  kt.lambda_mem = -0.1;
  EXPECT_THROW(kt.validate(), InvalidArgument);
}

}  // namespace
}  // namespace predbranch

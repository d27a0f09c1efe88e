// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "predbranch/gradsuite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "predbranch/baseline.hpp"
#include "predbranch/errors.hpp"
#include "predbranch/random.hpp"
#include "predbranch/transfer.hpp"

namespace predbranch {
namespace {

Vec random_vec(Rng& rng, std::size_t n, double scale) {
  Vec v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

void randomize(Mat& m, Rng& rng, double scale) {
  for (double& x : m.span()) x = scale * rng.normal();
}

Vec row_vec(const Mat& m) { return Vec(std::vector<double>(m.span().begin(), m.span().end())); }

void check_head_params(std::vector<ParamRef>& out, ClassifierHead& h) {
  out.push_back({h.name + ".W_e", &h.W_e});
  out.push_back({h.name + ".W_u", &h.W_u});
  out.push_back({h.name + ".W_z", &h.W_z});
  out.push_back({h.name + ".coef_e", &h.coef_e.W});
  out.push_back({h.name + ".coef_u", &h.coef_u.W});
}

GradSuiteCase transfer_case(const std::string& name, Rng& rng, const GradSuiteOptions& o, bool subset) {
  const auto P = static_cast<std::size_t>(o.feature_dim);
  const auto A = static_cast<std::size_t>(o.num_classes);
  std::vector<int> rows;
  if (subset) {
    for (int c = 0; c < o.num_classes; c += 2) rows.push_back(c);
  }
  const std::size_t c = subset ? rows.size() : A;
  Mat x(1, P), C(c, P), V(A, P);
  randomize(x, rng, 1.0);
  randomize(C, rng, 0.5);
  randomize(V, rng, 1.0);
  const Vec r = random_vec(rng, P, 1.0);
  const std::size_t target = rng.uniform_index(c);
  const KTConfig kt;
  auto loss = [&](GradTape* tape) {
    const Vec xv = row_vec(x);
    const TransferTrace tr = transfer_forward(xv, C, V, rows, kt);
    double l = dot(r.span(), tr.enhanced.span()) + cross_entropy_logits(tr.coef_logits, target);
    if (tape != nullptr) {
      Vec d_coef = softmax(tr.coef_logits);
      d_coef[target] -= 1.0;
      TransferGrads g{&tape->slot("C", c, P), &tape->slot("V", A, P), tape->slot("x", 1, P).span()};
      transfer_backward(tr, xv, C, V, rows, kt, r.span(), d_coef.span(), g);
    }
    return l;
  };
  const std::vector<ParamRef> params{{"x", &x}, {"C", &C}, {"V", &V}};
  return {name, grad_check(loss, params, o.step)};
}

}  // namespace

GradInstance random_grad_instance(std::uint64_t seed, const GradSuiteOptions& o) {
  if (o.group_size < 1 || o.group_size >= o.num_classes) {
    throw InvalidArgument("grad suite: group size must leave both groups non-empty");
  }
  Rng rng(derive_seed(seed, "gradsuite/instance"));
  const auto P = static_cast<std::size_t>(o.feature_dim);
  const auto A = static_cast<std::size_t>(o.num_classes);
  std::vector<int> classes(A);
  std::iota(classes.begin(), classes.end(), 0);
  rng.shuffle(std::span<int>(classes));
  std::vector<int> g1(classes.begin(), classes.begin() + o.group_size);
  std::vector<int> g2(classes.begin() + o.group_size, classes.end());
  std::sort(g1.begin(), g1.end());
  std::sort(g2.begin(), g2.end());
  const GroupPartition partition(o.num_classes, {g1, g2});

  ClassStats stats{Mat(A, A), Mat(A, P), Mat(A, P), std::vector<int>(A, 1), {}};
  randomize(stats.avg_e, rng, 1.0);
  randomize(stats.avg_u, rng, 1.0);
  GradInstance inst;
  inst.params = init_predictor(partition, stats, true, true, KTConfig{}, derive_seed(seed, "gradsuite/init"));
  inst.sample.e = random_vec(rng, P, 1.0);
  inst.sample.u = random_vec(rng, P, 1.0);
  Vec zl = random_vec(rng, A, 1.0);
  const Vec zp = softmax(zl);
  inst.sample.z = Vec(A);
  for (std::size_t j = 0; j < A; ++j) inst.sample.z[j] = std::log(zp[j]);
  inst.sample.g = static_cast<int>(rng.uniform_index(A));
  return inst;
}

std::vector<GradSuiteCase> run_grad_suite(std::uint64_t seed, const GradSuiteOptions& o) {
  const auto P = static_cast<std::size_t>(o.feature_dim);
  const auto A = static_cast<std::size_t>(o.num_classes);
  Rng rng(derive_seed(seed, "gradsuite/cases"));
  std::vector<GradSuiteCase> out;

  {
    BaselineParams bp = init_baseline(o.num_classes, o.feature_dim, derive_seed(seed, "gradsuite/baseline"));
    RelationSample s;
    s.e = random_vec(rng, P, 1.0);
    s.u = random_vec(rng, P, 1.0);
    s.z = random_vec(rng, A, 1.0);
    s.g = static_cast<int>(rng.uniform_index(A));
    auto loss = [&](GradTape* tape) { return baseline_loss(s, bp, tape); };
    out.push_back({"baseline", grad_check(loss, bp.parameters(), o.step)});
  }

  out.push_back(transfer_case("transfer_full", rng, o, false));
  out.push_back(transfer_case("transfer_subset", rng, o, true));

  {
    Mat x(1, P);
    randomize(x, rng, 1.0);
    Memory mem{Mat(A, P), true};
    randomize(mem.V, rng, 1.0);
    const int g = static_cast<int>(rng.uniform_index(A));
    const KTConfig kt;
    auto loss = [&](GradTape* tape) {
      const Vec xv = row_vec(x);
      if (tape != nullptr) {
        memory_loss_backward(xv, mem, g, kt, 1.0, tape->slot("x", 1, P).span(), &tape->slot("V", A, P));
      }
      return memory_loss(xv, mem, g, kt);
    };
    const std::vector<ParamRef> params{{"x", &x}, {"V", &mem.V}};
    out.push_back({"memory_loss", grad_check(loss, params, o.step)});
  }

  GradInstance inst = random_grad_instance(seed, o);
  PredictorParams& p = inst.params;
  const RelationSample& s = inst.sample;
  LossOptions full;
  full.memory_grad_from_relation = true;

  // Relation loss of one head, checked through total_loss with the memory
  // term and the other heads switched off.
  auto head_case = [&](const std::string& name, ClassifierHead& head) {
    PredictorParams solo = p;
    solo.kt.lambda_mem = 0.0;
    ClassifierHead* h = nullptr;
    if (head.kind == HeadKind::kRoot) {
      h = &*solo.root;
      solo.heads.clear();
    } else {
      solo.root.reset();
      solo.heads = {head};
      h = &solo.heads.front();
    }
    std::vector<ParamRef> params;
    check_head_params(params, *h);
    params.push_back({"memory_e", &solo.memory_e.V});
    params.push_back({"memory_u", &solo.memory_u.V});
    auto loss = [&](GradTape* tape) { return total_loss(s, solo, full, tape).total; };
    out.push_back({name, grad_check(loss, params, o.step)});
  };
  head_case("relation_root", *p.root);
  head_case("relation_group", p.heads[static_cast<std::size_t>(p.partition.group_of(s.g))]);

  {
    auto loss = [&](GradTape* tape) { return total_loss(s, p, full, tape).total; };
    out.push_back({"total_full_flow", grad_check(loss, p.parameters(), o.step)});
  }
  {
    std::vector<ParamRef> params;
    for (const ParamRef& r : p.parameters()) {
      if (r.id != "memory_e" && r.id != "memory_u") params.push_back(r);
    }
    auto loss = [&](GradTape* tape) { return total_loss(s, p, LossOptions{}, tape).total; };
    out.push_back({"total_default_routing", grad_check(loss, params, o.step)});
  }
  return out;
}

}  // namespace predbranch

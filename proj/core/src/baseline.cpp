// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "predbranch/baseline.hpp"

#include <cmath>

#include "predbranch/errors.hpp"
#include "predbranch/random.hpp"
#include "predbranch/trainer.hpp"

namespace predbranch {
namespace {

void check_dims(const RelationSample& s, const BaselineParams& p) {
  if (s.e.size() != p.feature_dim() || s.u.size() != p.feature_dim() || s.z.size() != p.num_classes() ||
      p.W_u.rows() != p.num_classes() || p.W_u.cols() != p.feature_dim()) {
    throw InvalidArgument("baseline: sample dimensions do not match the parameters");
  }
}

}  // namespace

std::vector<ParamRef> BaselineParams::parameters() { return {{"baseline.W_e", &W_e}, {"baseline.W_u", &W_u}}; }

BaselineParams init_baseline(int num_classes, int feature_dim, std::uint64_t seed) {
  if (num_classes < 1 || feature_dim < 1) throw InvalidArgument("init_baseline: dimensions must be positive");
  const auto A = static_cast<std::size_t>(num_classes);
  const auto P = static_cast<std::size_t>(feature_dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(P));
  Rng rng(derive_seed(seed, "init/baseline"));
  BaselineParams p{Mat(A, P), Mat(A, P)};
  for (double& w : p.W_e.span()) w = rng.uniform(-bound, bound);
  for (double& w : p.W_u.span()) w = rng.uniform(-bound, bound);
  return p;
}

Vec baseline_logits(const RelationSample& s, const BaselineParams& p) {
  check_dims(s, p);
  Vec logits = matvec(p.W_e, s.e.span());
  const Vec lu = matvec(p.W_u, s.u.span());
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += lu[i] + s.z[i];
  return logits;
}

Vec baseline_forward(const RelationSample& s, const BaselineParams& p) { return softmax(baseline_logits(s, p)); }

double baseline_loss(const RelationSample& s, const BaselineParams& p, GradTape* tape, double weight) {
  const Vec logits = baseline_logits(s, p);
  const auto g = static_cast<std::size_t>(s.g);
  const double loss = cross_entropy_logits(logits, g);
  if (tape != nullptr) {
    Vec d = softmax(logits);
    d[g] -= 1.0;
    add_outer(tape->slot("baseline.W_e", p.W_e.rows(), p.W_e.cols()), d.span(), s.e.span(), weight);
    add_outer(tape->slot("baseline.W_u", p.W_u.rows(), p.W_u.cols()), d.span(), s.u.span(), weight);
  }
  return loss;
}

BaselineParams pretrain_baseline(const Dataset& ds, const TrainConfig& cfg, std::vector<double>* loss_trace) {
  cfg.validate();
  const auto& train = ds.train();
  if (train.empty()) throw InvalidArgument("pretrain_baseline: empty training split");
  BaselineParams params = init_baseline(ds.spec.num_classes, ds.spec.feature_dim, cfg.seed);
  auto refs = params.parameters();
  SgdOptimizer opt(cfg.momentum);
  BatchStream batches(train.size(), derive_seed(cfg.seed, "batches/baseline"));
  GradTape tape;
  const int iters = cfg.effective_pretrain_iters();
  for (int it = 0; it < iters; ++it) {
    const auto batch = batches.next(static_cast<std::size_t>(cfg.batch_size));
    tape.zero();
    const double w = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (std::size_t idx : batch) total += baseline_loss(train[idx], params, &tape, w);
    opt.step(refs, tape, lr_at(it, cfg));
    if (loss_trace != nullptr) loss_trace->push_back(total * w);
  }
  return params;
}

ClassStats class_statistics(const Dataset& ds, const BaselineParams& p) {
  const auto A = static_cast<std::size_t>(ds.spec.num_classes);
  const auto P = static_cast<std::size_t>(ds.spec.feature_dim);
  ClassStats st{Mat(A, A), Mat(A, P), Mat(A, P), std::vector<int>(A, 0), {}};
  for (const auto& s : ds.train()) {
    const auto g = static_cast<std::size_t>(s.g);
    const Vec prob = baseline_forward(s, p);
    auto prow = st.avg_prob.row(g);
    for (std::size_t j = 0; j < A; ++j) prow[j] += prob[j];
    auto erow = st.avg_e.row(g);
    auto urow = st.avg_u.row(g);
    for (std::size_t j = 0; j < P; ++j) {
      erow[j] += s.e[j];
      urow[j] += s.u[j];
    }
    ++st.support[g];
  }
  for (std::size_t c = 0; c < A; ++c) {
    if (st.support[c] == 0) {
      for (double& v : st.avg_prob.row(c)) v = 1.0 / static_cast<double>(A);
      st.warnings.push_back("class " + std::to_string(c) + " has no training samples");
      continue;
    }
    const double inv = 1.0 / st.support[c];
    for (double& v : st.avg_prob.row(c)) v *= inv;
    for (double& v : st.avg_e.row(c)) v *= inv;
    for (double& v : st.avg_u.row(c)) v *= inv;
  }
  return st;
}

double accuracy(const std::vector<RelationSample>& samples, const BaselineParams& p) {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : samples) {
    if (argmax(baseline_logits(s, p).span()) == static_cast<std::size_t>(s.g)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace predbranch

// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "predbranch/branching.hpp"

#include <cmath>
#include <numeric>

#include "predbranch/errors.hpp"
#include "predbranch/random.hpp"

namespace predbranch {
namespace {

constexpr const char* kMemoryE = "memory_e";
constexpr const char* kMemoryU = "memory_u";

void init_uniform(Mat& m, Rng& rng, std::size_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& w : m.span()) w = rng.uniform(-bound, bound);
}

/// Target distributions for one head: over its outputs and over its
/// coefficient entries.
struct HeadTargets {
  Vec output;
  Vec coef;
};

HeadTargets one_hot_targets(const ClassifierHead& head, int g) {
  const auto cls = static_cast<std::size_t>(g);
  if (g < 0 || cls >= head.output_of_class.size()) throw InvalidArgument("relation_loss: label out of range");
  const int out = head.output_of_class[cls];
  if (out < 0) {
    throw InvalidArgument("relation_loss: label " + std::to_string(g) + " is outside the target set of " + head.name);
  }
  HeadTargets t{Vec(head.num_outputs()), Vec(head.coef_dim())};
  t.output[static_cast<std::size_t>(out)] = 1.0;
  if (head.coef_dim() > 0) t.coef[static_cast<std::size_t>(head.coef_of_class[cls])] = 1.0;
  return t;
}

HeadTargets uniform_targets(const ClassifierHead& head) {
  HeadTargets t{Vec(head.num_outputs(), 1.0 / static_cast<double>(head.num_outputs())), Vec(head.coef_dim())};
  if (head.coef_dim() > 0) t.coef = Vec(head.coef_dim(), 1.0 / static_cast<double>(head.coef_dim()));
  return t;
}

double ce(const Vec& logits, const Vec& target) {
  for (std::size_t j = 0; j < target.size(); ++j) {
    if (target[j] == 1.0) return cross_entropy_logits(logits, j);
  }
  return cross_entropy_logits_soft(logits, target.span());
}

double head_loss(const HeadTrace& tr, const HeadTargets& t, const LossOptions& opts) {
  double loss = ce(tr.logits, t.output) + ce(tr.logits_e, t.output) + ce(tr.logits_u, t.output) +
                ce(tr.logits_z, t.output);
  if (tr.transfer_e) loss += ce(tr.transfer_e->coef_logits, t.coef);
  if (tr.transfer_u && opts.coef_ce_both_streams) loss += ce(tr.transfer_u->coef_logits, t.coef);
  return loss;
}

Vec ce_grad(const Vec& logits, const Vec& target, double weight) {
  Vec d = softmax(logits);
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = weight * (d[j] - target[j]);
  return d;
}

void head_backward(const RelationSample& s, const ClassifierHead& head, const HeadTrace& tr,
                   const PredictorParams& params, const HeadTargets& t, const LossOptions& opts, double weight,
                   GradTape& tape) {
  const Vec d_total = ce_grad(tr.logits, t.output, weight);
  Vec d_le = ce_grad(tr.logits_e, t.output, weight);
  Vec d_lu = ce_grad(tr.logits_u, t.output, weight);
  Vec d_lz = ce_grad(tr.logits_z, t.output, weight);
  for (std::size_t j = 0; j < d_total.size(); ++j) {
    d_le[j] += d_total[j];
    d_lu[j] += d_total[j];
    d_lz[j] += d_total[j];
  }
  const std::size_t c = head.num_outputs();
  add_outer(tape.slot(head.name + ".W_e", c, head.W_e.cols()), d_le.span(), tr.e_feature.span());
  add_outer(tape.slot(head.name + ".W_u", c, head.W_u.cols()), d_lu.span(), tr.u_feature.span());
  add_outer(tape.slot(head.name + ".W_z", c, head.W_z.cols()), d_lz.span(), s.z.span());

  if (!tr.transfer_e) return;
  const Vec d_e_feature = matvec_transposed(head.W_e, d_le.span());
  const Vec d_u_feature = matvec_transposed(head.W_u, d_lu.span());
  const Vec d_coef_e = ce_grad(tr.transfer_e->coef_logits, t.coef, weight);
  Vec d_coef_u;
  if (opts.coef_ce_both_streams) d_coef_u = ce_grad(tr.transfer_u->coef_logits, t.coef, weight);

  const std::size_t P = head.W_e.cols();
  const std::size_t A = params.num_classes();
  TransferGrads ge{&tape.slot(head.name + ".coef_e", head.coef_dim(), P),
                   opts.memory_grad_from_relation ? &tape.slot(kMemoryE, A, P) : nullptr, {}};
  transfer_backward(*tr.transfer_e, s.e, head.coef_e.W, params.memory_e.V, head.memory_rows, params.kt,
                    d_e_feature.span(), d_coef_e.span(), ge);
  TransferGrads gu{&tape.slot(head.name + ".coef_u", head.coef_dim(), P),
                   opts.memory_grad_from_relation ? &tape.slot(kMemoryU, A, P) : nullptr, {}};
  transfer_backward(*tr.transfer_u, s.u, head.coef_u.W, params.memory_u.V, head.memory_rows, params.kt,
                    d_u_feature.span(), d_coef_u.span(), gu);
}

void push_head_params(std::vector<ParamRef>& out, ClassifierHead& h, bool kt) {
  out.push_back({h.name + ".W_e", &h.W_e});
  out.push_back({h.name + ".W_u", &h.W_u});
  out.push_back({h.name + ".W_z", &h.W_z});
  if (kt) {
    out.push_back({h.name + ".coef_e", &h.coef_e.W});
    out.push_back({h.name + ".coef_u", &h.coef_u.W});
  }
}

}  // namespace

ClassifierHead make_head(HeadKind kind, const GroupPartition& partition, int group, int feature_dim,
                         bool knowledge_transfer) {
  const auto A = partition.num_classes();
  const auto P = static_cast<std::size_t>(feature_dim);
  ClassifierHead h;
  h.kind = kind;
  h.output_of_class.assign(A, -1);
  h.coef_of_class.assign(A, -1);
  std::size_t outputs = 0;
  switch (kind) {
    case HeadKind::kRoot:
      h.name = "root";
      outputs = partition.num_groups();
      for (std::size_t c = 0; c < A; ++c) h.output_of_class[c] = partition.group_of(static_cast<int>(c));
      std::iota(h.coef_of_class.begin(), h.coef_of_class.end(), 0);
      break;
    case HeadKind::kAllClass:
      h.name = "all";
      outputs = A;
      std::iota(h.output_of_class.begin(), h.output_of_class.end(), 0);
      std::iota(h.coef_of_class.begin(), h.coef_of_class.end(), 0);
      break;
    case HeadKind::kGroup: {
      if (group < 0 || static_cast<std::size_t>(group) >= partition.num_groups()) {
        throw InvalidArgument("make_head: group " + std::to_string(group) + " out of range");
      }
      h.name = "group" + std::to_string(group);
      h.group = group;
      h.memory_rows = partition.group(static_cast<std::size_t>(group));
      outputs = h.memory_rows.size();
      for (std::size_t l = 0; l < h.memory_rows.size(); ++l) {
        const auto c = static_cast<std::size_t>(h.memory_rows[l]);
        h.output_of_class[c] = static_cast<int>(l);
        h.coef_of_class[c] = static_cast<int>(l);
      }
      break;
    }
  }
  const std::size_t coef_rows = h.memory_rows.empty() ? A : h.memory_rows.size();
  h.W_e = Mat(outputs, P);
  h.W_u = Mat(outputs, P);
  h.W_z = Mat(outputs, A);
  if (knowledge_transfer) {
    h.coef_e.W = Mat(coef_rows, P);
    h.coef_u.W = Mat(coef_rows, P);
  }
  return h;
}

std::vector<ParamRef> PredictorParams::parameters() {
  std::vector<ParamRef> out;
  if (root) push_head_params(out, *root, knowledge_transfer);
  for (auto& h : heads) push_head_params(out, h, knowledge_transfer);
  if (knowledge_transfer) {
    if (memory_e.trainable) out.push_back({kMemoryE, &memory_e.V});
    if (memory_u.trainable) out.push_back({kMemoryU, &memory_u.V});
  }
  return out;
}

PredictorParams init_predictor(const GroupPartition& partition, const ClassStats& stats, bool branched,
                               bool knowledge_transfer, const KTConfig& kt, std::uint64_t seed) {
  kt.validate();
  if (stats.num_classes() != partition.num_classes()) {
    throw InvalidArgument("init_predictor: class statistics and partition disagree on A");
  }
  const auto P = static_cast<int>(stats.avg_e.cols());
  const auto A = partition.num_classes();
  PredictorParams params;
  params.branched = branched;
  params.knowledge_transfer = knowledge_transfer;
  params.kt = kt;
  if (branched) {
    params.partition = partition;
    params.root = make_head(HeadKind::kRoot, partition, 0, P, knowledge_transfer);
    for (std::size_t b = 0; b < partition.num_groups(); ++b) {
      params.heads.push_back(make_head(HeadKind::kGroup, partition, static_cast<int>(b), P, knowledge_transfer));
    }
  } else {
    params.partition = GroupPartition::trivial(static_cast<int>(A));
    params.heads.push_back(make_head(HeadKind::kAllClass, params.partition, 0, P, knowledge_transfer));
  }
  auto init_head = [&](ClassifierHead& h) {
    Rng rng(derive_seed(seed, "init/" + h.name));
    init_uniform(h.W_e, rng, static_cast<std::size_t>(P));
    init_uniform(h.W_u, rng, static_cast<std::size_t>(P));
    init_uniform(h.W_z, rng, A);
    init_uniform(h.coef_e.W, rng, static_cast<std::size_t>(P));
    init_uniform(h.coef_u.W, rng, static_cast<std::size_t>(P));
  };
  if (params.root) init_head(*params.root);
  for (auto& h : params.heads) init_head(h);
  params.memory_e = init_memory(stats, Stream::kContext);
  params.memory_u = init_memory(stats, Stream::kUnion);
  params.memory_e.trainable = params.memory_u.trainable = knowledge_transfer;
  return params;
}

HeadTrace branch_forward(const RelationSample& s, const ClassifierHead& head, const Memory& memory_e,
                         const Memory& memory_u, const KTConfig& kt, bool knowledge_transfer) {
  const std::size_t P = head.W_e.cols();
  if (s.e.size() != P || s.u.size() != P || s.z.size() != head.W_z.cols()) {
    throw InvalidArgument("branch_forward: sample dimensions do not match head " + head.name);
  }
  HeadTrace tr;
  if (knowledge_transfer) {
    tr.transfer_e = transfer_forward(s.e, head.coef_e.W, memory_e.V, head.memory_rows, kt);
    tr.transfer_u = transfer_forward(s.u, head.coef_u.W, memory_u.V, head.memory_rows, kt);
    tr.e_feature = tr.transfer_e->enhanced;
    tr.u_feature = tr.transfer_u->enhanced;
  } else {
    tr.e_feature = s.e;
    tr.u_feature = s.u;
  }
  tr.logits_e = matvec(head.W_e, tr.e_feature.span());
  tr.logits_u = matvec(head.W_u, tr.u_feature.span());
  tr.logits_z = matvec(head.W_z, s.z.span());
  tr.logits = Vec(head.num_outputs());
  for (std::size_t j = 0; j < tr.logits.size(); ++j) tr.logits[j] = tr.logits_e[j] + tr.logits_u[j] + tr.logits_z[j];
  tr.p = softmax(tr.logits);
  return tr;
}

ForwardTrace predictor_forward(const RelationSample& s, const PredictorParams& params) {
  ForwardTrace ft;
  if (params.root) {
    ft.root = branch_forward(s, *params.root, params.memory_e, params.memory_u, params.kt, params.knowledge_transfer);
  }
  for (const auto& h : params.heads) {
    ft.heads.push_back(branch_forward(s, h, params.memory_e, params.memory_u, params.kt, params.knowledge_transfer));
  }
  if (params.knowledge_transfer) {
    ft.mem_e = memory_loss(s.e, params.memory_e, s.g, params.kt);
    ft.mem_u = memory_loss(s.u, params.memory_u, s.g, params.kt);
  }
  return ft;
}

int choose_group(const Vec& root_p) {
  int chosen = 0;
  for (std::size_t b = 1; b < root_p.size(); ++b) {
    if (root_p[b] >= root_p[static_cast<std::size_t>(chosen)]) chosen = static_cast<int>(b);
  }
  return chosen;
}

RoutedScores route_and_score(const RelationSample& s, const PredictorParams& params, RoutingMode mode) {
  const std::size_t A = params.num_classes();
  RoutedScores out{Vec(A), 0};
  if (!params.root) {
    const HeadTrace tr =
        branch_forward(s, params.heads.front(), params.memory_e, params.memory_u, params.kt, params.knowledge_transfer);
    out.scores = tr.p;
    return out;
  }
  const HeadTrace root =
      branch_forward(s, *params.root, params.memory_e, params.memory_u, params.kt, params.knowledge_transfer);
  out.chosen = choose_group(root.p);
  for (std::size_t b = 0; b < params.heads.size(); ++b) {
    const ClassifierHead& h = params.heads[b];
    const HeadTrace tr = branch_forward(s, h, params.memory_e, params.memory_u, params.kt, params.knowledge_transfer);
    for (std::size_t l = 0; l < h.memory_rows.size(); ++l) {
      const auto cls = static_cast<std::size_t>(h.memory_rows[l]);
      if (mode == RoutingMode::kSoft) {
        out.scores[cls] = root.p[b] * tr.p[l];
      } else {
        out.scores[cls] = (static_cast<int>(b) == out.chosen ? 2.0 : 0.0) + tr.p[l];
      }
    }
  }
  return out;
}

LossOptions LossOptions::from(const TrainConfig& cfg) {
  return LossOptions{cfg.coef_ce_both_streams, cfg.off_branch, cfg.mem_loss_per_classifier,
                     cfg.memory_grad_from_relation};
}

double relation_loss(const HeadTrace& trace, const ClassifierHead& head, int g, const LossOptions& opts) {
  return head_loss(trace, one_hot_targets(head, g), opts);
}

double relation_loss_uniform(const HeadTrace& trace, const ClassifierHead& head, const LossOptions& opts) {
  return head_loss(trace, uniform_targets(head), opts);
}

double LossBreakdown::rel_total() const {
  double s = rel_root;
  for (double r : rel_heads) s += r;
  return s;
}

LossBreakdown total_loss(const RelationSample& s, const PredictorParams& params, const LossOptions& opts,
                         GradTape* tape, double weight) {
  const std::size_t A = params.num_classes();
  if (s.g < 0 || static_cast<std::size_t>(s.g) >= A) throw InvalidArgument("total_loss: label out of range");
  LossBreakdown out;
  out.rel_heads.assign(params.heads.size(), 0.0);
  int classifiers = 0;

  auto run_head = [&](const ClassifierHead& head, double& slot) {
    const bool covers = head.covers(s.g);
    if (!covers && opts.off_branch == OffBranchLoss::kMasked) return;
    const HeadTrace tr =
        branch_forward(s, head, params.memory_e, params.memory_u, params.kt, params.knowledge_transfer);
    const HeadTargets t = covers ? one_hot_targets(head, s.g) : uniform_targets(head);
    slot = head_loss(tr, t, opts);
    ++classifiers;
    if (tape != nullptr) head_backward(s, head, tr, params, t, opts, weight, *tape);
  };
  if (params.root) run_head(*params.root, out.rel_root);
  for (std::size_t b = 0; b < params.heads.size(); ++b) run_head(params.heads[b], out.rel_heads[b]);

  if (params.knowledge_transfer) {
    out.mem_e = memory_loss(s.e, params.memory_e, s.g, params.kt);
    out.mem_u = memory_loss(s.u, params.memory_u, s.g, params.kt);
    out.mem_weight = params.kt.lambda_mem * (opts.mem_loss_per_classifier ? classifiers : 1);
    if (tape != nullptr && out.mem_weight != 0.0) {
      const std::size_t P = params.memory_e.V.cols();
      if (params.memory_e.trainable) {
        memory_loss_backward(s.e, params.memory_e, s.g, params.kt, weight * out.mem_weight, {},
                             &tape->slot(kMemoryE, A, P));
      }
      if (params.memory_u.trainable) {
        memory_loss_backward(s.u, params.memory_u, s.g, params.kt, weight * out.mem_weight, {},
                             &tape->slot(kMemoryU, A, P));
      }
    }
  }
  out.total = out.rel_total() + out.mem_weight * (out.mem_e + out.mem_u);
  return out;
}

}  // namespace predbranch

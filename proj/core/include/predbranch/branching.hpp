// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0
//
// The branched relation predictor: a root classifier choosing a label
// group, one fine-grained classifier per group, and the relation losses.
// Every classifier computes
//
//   p = softmax(W_e e′ + W_u u′ + W_z z)
//
// where e′, u′ are the knowledge-enhanced features (or e, u with knowledge
// transfer off). The root and an unbranched all-class head draw knowledge
// from every memory row; a group head only from its own group's rows.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "predbranch/clustering.hpp"
#include "predbranch/config.hpp"
#include "predbranch/numerics.hpp"
#include "predbranch/synthdata.hpp"
#include "predbranch/transfer.hpp"

namespace predbranch {

enum class HeadKind { kRoot, kGroup, kAllClass };

struct ClassifierHead {
  std::string name;
  HeadKind kind = HeadKind::kGroup;
  int group = 0;                     // for kGroup
  std::vector<int> memory_rows;      // empty: every row
  std::vector<int> output_of_class;  // class → output index, −1 outside the target set
  std::vector<int> coef_of_class;    // class → coefficient index, −1 outside memory_rows
  Mat W_e, W_u, W_z;                 // c x P, c x P, c x A
  CoefficientProjector coef_e, coef_u;  // c_coef x P; empty without knowledge transfer

  std::size_t num_outputs() const { return W_e.rows(); }
  std::size_t coef_dim() const { return coef_e.W.rows(); }
  bool covers(int cls) const { return output_of_class.at(static_cast<std::size_t>(cls)) >= 0; }
  friend bool operator==(const ClassifierHead&, const ClassifierHead&) = default;
};

/// Builds a zero-weight head of the given kind; `group` is used for kGroup.
ClassifierHead make_head(HeadKind kind, const GroupPartition& partition, int group, int feature_dim,
                         bool knowledge_transfer);

struct PredictorParams {
  GroupPartition partition;
  bool branched = true;
  bool knowledge_transfer = true;
  std::optional<ClassifierHead> root;  // present iff branched
  std::vector<ClassifierHead> heads;   // one per group, or a single all-class head
  Memory memory_e, memory_u;
  KTConfig kt;

  std::size_t num_classes() const { return partition.num_classes(); }
  std::vector<ParamRef> parameters();
  friend bool operator==(const PredictorParams&, const PredictorParams&) = default;
};

/// Heads initialised uniform in ±1/√fan_in from `seed`; memories from the
/// class averages.
PredictorParams init_predictor(const GroupPartition& partition, const ClassStats& stats, bool branched,
                               bool knowledge_transfer, const KTConfig& kt, std::uint64_t seed);

/// One classifier's forward pass.
struct HeadTrace {
  std::optional<TransferTrace> transfer_e, transfer_u;
  Vec e_feature, u_feature;  // e′, u′
  Vec logits_e, logits_u, logits_z;
  Vec logits;  // sum of the three
  Vec p;

  const Vec* coef_e() const { return transfer_e ? &transfer_e->coef : nullptr; }
  const Vec* coef_u() const { return transfer_u ? &transfer_u->coef : nullptr; }
};

HeadTrace branch_forward(const RelationSample& s, const ClassifierHead& head, const Memory& memory_e,
                         const Memory& memory_u, const KTConfig& kt, bool knowledge_transfer);

struct ForwardTrace {
  std::optional<HeadTrace> root;
  std::vector<HeadTrace> heads;
  double mem_e = 0.0;
  double mem_u = 0.0;
};

ForwardTrace predictor_forward(const RelationSample& s, const PredictorParams& params);

struct RoutedScores {
  Vec scores;        // over all A classes, higher is better
  int chosen = 0;    // chosen group
};

/// Hard: the chosen group's labels score 2 + p_b, every other label its own
/// group probability, so the chosen group ranks first. Soft:
/// p_root[group(j)] · p_group(j)[local(j)].
RoutedScores route_and_score(const RelationSample& s, const PredictorParams& params, RoutingMode mode);

/// Chosen group given root probabilities: group 0 only when p[0] > p[1]
/// strictly; in general the last maximal entry.
int choose_group(const Vec& root_p);

struct LossOptions {
  bool coef_ce_both_streams = false;
  OffBranchLoss off_branch = OffBranchLoss::kMasked;
  bool mem_loss_per_classifier = false;
  bool memory_grad_from_relation = false;

  static LossOptions from(const TrainConfig& cfg);
};

/// Relation loss of one classifier for label `g`: CE of the
/// final output, the e-stream coefficient (and u-stream when enabled),
/// and the three single-input logit sets. Throws InvalidArgument if a
/// group head does not cover g.
double relation_loss(const HeadTrace& trace, const ClassifierHead& head, int g, const LossOptions& opts = {});

/// The same terms against a uniform target, for off-branch supervision.
double relation_loss_uniform(const HeadTrace& trace, const ClassifierHead& head, const LossOptions& opts = {});

struct LossBreakdown {
  double total = 0.0;
  double rel_root = 0.0;
  std::vector<double> rel_heads;  // per fine-grained (or all-class) head
  double mem_e = 0.0;             // raw memory loss per stream, before λ
  double mem_u = 0.0;
  double mem_weight = 0.0;        // λ times the number of memory terms

  double rel_total() const;
};

/// L = L_rel + λ (L_mem,e + L_mem,u). With masking, a head whose target set
/// excludes g contributes 0. Accumulates gradients when `tape` is given,
/// scaled by `weight`.
LossBreakdown total_loss(const RelationSample& s, const PredictorParams& params, const LossOptions& opts,
                         GradTape* tape = nullptr, double weight = 1.0);

}  // namespace predbranch

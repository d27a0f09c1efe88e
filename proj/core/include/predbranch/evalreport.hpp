// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scene-level recall@K, mean recall@K, frequency-group reporting and the
// branch / knowledge-transfer ablation grid.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "predbranch/config.hpp"
#include "predbranch/numerics.hpp"
#include "predbranch/synthdata.hpp"
#include "predbranch/trainer.hpp"

namespace predbranch {

/// Scores of every candidate relation in one scene (one Vec over A labels
/// per candidate) and the candidates' ground-truth labels.
struct SceneScores {
  std::vector<Vec> scores;
  std::vector<int> labels;
};

struct RecallResult {
  std::vector<int> hits;     // recalled ground-truth instances per class
  std::vector<int> support;  // ground-truth instances per class
  std::vector<double> recall;  // hits / support, 0 where support is 0

  /// Mean of per-class recall over classes with support > 0.
  double mean_recall() const;
};

/// Within each scene the (candidate, label) pairs are ranked by score,
/// ties going to the lower label index and then the lower candidate
/// index; a ground-truth pair is recalled when its rank is below K.
RecallResult recall_at_k(const std::vector<SceneScores>& scenes, int num_classes, int k);

struct FrequencyGroups {
  std::vector<int> top, middle, bottom;
};

/// Ranks classes by descending frequency (ties: lower index first); top
/// gets ⌊0.2A⌋ classes, bottom ⌊0.3A⌋, middle the rest.
FrequencyGroups frequency_groups(const std::vector<int>& frequency);

struct GroupMeans {
  double top = 0.0;
  double middle = 0.0;
  double bottom = 0.0;
};

/// Mean recall of each frequency group over its classes with support > 0;
/// a group without any supported class reports 0.
GroupMeans group_report(const RecallResult& r, const FrequencyGroups& groups);

struct KReport {
  int k = 0;
  RecallResult result;
  double mean_recall = 0.0;
  GroupMeans groups;
};

struct EvalReport {
  std::string config_name;
  std::uint64_t seed = 0;
  std::vector<KReport> per_k;
  std::vector<int> train_frequency;
  std::string config_json;  // echo of the training configuration

  const KReport& at(int k) const;
};

/// Scores every scene of `samples` with `score` (in parallel; the result is
/// order-independent).
std::vector<SceneScores> score_scenes(const std::vector<RelationSample>& samples,
                                      const std::function<Vec(const RelationSample&)>& score);

/// Evaluates a checkpoint on a split: the predictor when present (with
/// cfg.routing), otherwise the pretrained baseline.
EvalReport evaluate_checkpoint(const Checkpoint& ck, const Dataset& ds, Split split, const std::vector<int>& ks,
                               const std::string& config_name);

std::string report_csv_header(int num_classes);
/// One CSV line per K.
std::string report_csv_rows(const EvalReport& r);
std::string report_csv(const std::vector<EvalReport>& reports);

/// The four ablation configurations derived from `base`:
/// baseline (one all-class head, no transfer), branch (transfer off,
/// λ = 0), kt (one all-class head with transfer) and branch_kt.
std::vector<std::pair<std::string, TrainConfig>> ablation_configs(const TrainConfig& base);

/// Trains and evaluates the four configurations for every seed. Each seed
/// pretrains one baseline shared by its four rows.
std::vector<EvalReport> ablation_run(const Dataset& ds, const TrainConfig& base, const std::vector<std::uint64_t>& seeds);

}  // namespace predbranch

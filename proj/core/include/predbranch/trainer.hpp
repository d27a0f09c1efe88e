// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-phase training (baseline pretraining, then the branched predictor with
// class memories), the learning-rate schedule and checkpoints.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "predbranch/baseline.hpp"
#include "predbranch/branching.hpp"
#include "predbranch/clustering.hpp"
#include "predbranch/config.hpp"
#include "predbranch/random.hpp"
#include "predbranch/synthdata.hpp"

namespace predbranch {

/// Endless sequence of indices into [0, n): a fresh seeded permutation per
/// epoch. A batch may straddle two epochs.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::uint64_t seed);
  std::vector<std::size_t> next(std::size_t batch_size);
  std::size_t epoch() const { return epoch_; }
  /// True when the next index starts a new epoch.
  bool at_epoch_start() const { return pos_ == 0; }

 private:
  void reshuffle();

  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::size_t epoch_ = 0;
};

/// Linear warmup from 0 to base_lr over warmup_iters, then constant
/// (optionally step-decayed).
double lr_at(int iter, const TrainConfig& cfg);

struct LossLogRow {
  int iter = 0;
  double total = 0.0;
  double rel_root = 0.0;
  std::vector<double> rel_heads;
  double mem_e = 0.0;
  double mem_u = 0.0;
  double lr = 0.0;
};

/// Batch-mean loss components of every training step.
struct LossLog {
  std::vector<std::string> head_names;  // excluding the root
  std::vector<LossLogRow> rows;

  std::string to_csv() const;
  /// Mean total loss over rows [from, to).
  double mean_total(std::size_t from, std::size_t to) const;
};

struct Checkpoint {
  static constexpr const char* kVersion = "1";

  TrainConfig config;
  std::optional<GroupPartition> partition;
  BaselineParams baseline;
  std::optional<ClassStats> stats;
  std::optional<PredictorParams> predictor;  // absent for a baseline-only checkpoint
  int iteration = 0;
  std::map<std::string, double> metrics;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Pretrains the baseline and records its class statistics.
Checkpoint pretrain_checkpoint(const Dataset& ds, const TrainConfig& cfg);

/// Trains the predictor described by cfg (branch / knowledge_transfer) for
/// cfg.total_iters steps, with memories initialised from `stats`.
/// `partition` is ignored for an unbranched predictor.
Checkpoint train_predictor(const Dataset& ds, const ClassStats& stats, const GroupPartition& partition,
                           const TrainConfig& cfg, LossLog* log = nullptr,
                           const BaselineParams* baseline = nullptr);

/// Predictor training starting from a pretrained checkpoint: reuses its
/// statistics (recomputing them if absent) and partition (clustering if
/// absent).
Checkpoint train_from_pretrained(const Dataset& ds, const Checkpoint& pretrained, const TrainConfig& cfg,
                                 LossLog* log = nullptr);

/// The whole pipeline: pretrain, statistics, clustering, predictor.
Checkpoint train_pipeline(const Dataset& ds, const TrainConfig& cfg, LossLog* log = nullptr);

/// Per-class memory geometry of one stream over a split.
struct MemoryGeometry {
  std::vector<int> support;
  std::vector<double> own_distance;    // mean ‖x − v_g‖
  std::vector<double> other_distance;  // mean ‖x − v_i‖ over i ≠ g

  /// Fraction of classes with support ≥ min_support whose own distance is
  /// below their other distance.
  double separated_fraction(int min_support) const;
};

MemoryGeometry memory_geometry(const std::vector<RelationSample>& samples, const Memory& mem, Stream stream);

/// Fraction of classes with support ≥ min_support whose mean own-row
/// distance shrank from `before` to `after`.
double drift_fraction(const MemoryGeometry& before, const MemoryGeometry& after, int min_support);

}  // namespace predbranch

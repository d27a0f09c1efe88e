// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace predbranch {

/// Knowledge-transfer constants: feature scale α, memory-loss weight γ,
/// margin M and the overall memory-loss balance λ.
struct KTConfig {
  double alpha = 10.0;
  double gamma = 0.01;
  double margin = 80.0;
  double lambda_mem = 1.0;

  void validate() const;
  friend bool operator==(const KTConfig&, const KTConfig&) = default;
};

enum class RoutingMode { kHard, kSoft };
enum class Linkage { kAverage, kSingle, kComplete };
enum class Metric { kEuclidean, kSquaredEuclidean, kCityBlock };

/// What a fine-grained head learns from a sample whose label lies in a
/// different group: nothing (masked) or a uniform target over its classes.
enum class OffBranchLoss { kMasked, kUniformTarget };

struct TrainConfig {
  int batch_size = 32;
  double base_lr = 0.01;
  int warmup_iters = 500;
  int total_iters = 3000;
  /// Baseline pretraining length; negative means "same as total_iters".
  int pretrain_iters = -1;
  double momentum = 0.0;
  /// Step decay: multiply the rate by lr_decay_factor every lr_decay_every
  /// iterations after warmup. 0 disables decay.
  int lr_decay_every = 0;
  double lr_decay_factor = 1.0;
  std::uint64_t seed = 0;
  KTConfig kt;

  bool branch = true;
  bool knowledge_transfer = true;
  int num_groups = 2;
  Linkage linkage = Linkage::kAverage;
  Metric metric = Metric::kEuclidean;

  /// Let the relation loss back-propagate into the memories too.
  bool memory_grad_from_relation = false;
  OffBranchLoss off_branch = OffBranchLoss::kMasked;
  /// Add the coefficient cross-entropy for the u-stream as well as e.
  bool coef_ce_both_streams = false;
  /// Count the memory loss once per evaluated classifier instead of once per sample.
  bool mem_loss_per_classifier = false;

  RoutingMode routing = RoutingMode::kHard;
  std::vector<int> ks{10};

  int effective_pretrain_iters() const { return pretrain_iters < 0 ? total_iters : pretrain_iters; }
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

std::string_view to_string(RoutingMode m);
std::string_view to_string(Linkage l);
std::string_view to_string(Metric m);
std::string_view to_string(OffBranchLoss o);
RoutingMode routing_from_string(std::string_view s);
Linkage linkage_from_string(std::string_view s);
Metric metric_from_string(std::string_view s);
OffBranchLoss off_branch_from_string(std::string_view s);

/// JSON with every field materialised.
std::string train_config_to_json(const TrainConfig& cfg);
/// Accepts partial objects; absent fields keep their defaults.
TrainConfig train_config_from_json(const std::string& text);
/// Applies the fields present in `text` on top of `base`.
TrainConfig merge_train_config(const TrainConfig& base, const std::string& text);

}  // namespace predbranch

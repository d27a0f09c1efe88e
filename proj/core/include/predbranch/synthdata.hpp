// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic long-tailed relation datasets with planted label-similarity
// structure. Each class has a mean for the context stream (e) and the union
// stream (u); class means of one latent cluster sit close together, and the
// log-prior z only identifies the cluster, never the class.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "predbranch/numerics.hpp"

namespace predbranch {

struct DatasetSpec {
  int num_classes = 20;        // A
  int feature_dim = 16;        // P
  int n_train = 20000;
  int n_val = 0;
  int n_test = 5000;
  double imbalance_exponent = 1.3;  // class frequency ∝ rank^(-exponent)
  int n_latent_clusters = 2;
  double cluster_separation = 4.0;  // between : within mean distance of class means
  double noise_scale = 0.5;         // per-component std of sample noise
  int scene_size = 5;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument naming the first violated constraint.
  void validate() const;
  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct RelationSample {
  Vec e;  // context feature, P
  Vec u;  // union feature, P
  Vec z;  // log-prior over classes, A
  int g = 0;
  int scene_id = 0;

  friend bool operator==(const RelationSample&, const RelationSample&) = default;
};

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };
inline constexpr std::array<Split, 3> kAllSplits{Split::kTrain, Split::kVal, Split::kTest};
const char* split_name(Split s);

struct Dataset {
  DatasetSpec spec;
  std::array<std::vector<RelationSample>, 3> splits;
  std::array<std::vector<int>, 3> class_counts;
  Mat class_means_e;  // A x P
  Mat class_means_u;  // A x P
  std::vector<int> planted_cluster;  // latent cluster of each class

  std::vector<RelationSample>& split(Split s) { return splits[static_cast<int>(s)]; }
  const std::vector<RelationSample>& split(Split s) const { return splits[static_cast<int>(s)]; }
  const std::vector<int>& counts(Split s) const { return class_counts[static_cast<int>(s)]; }
  const std::vector<RelationSample>& train() const { return split(Split::kTrain); }
  const std::vector<RelationSample>& test() const { return split(Split::kTest); }

  /// Throws InvalidArgument on dimension, label, count or scene-id violations.
  void validate() const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Largest-remainder apportionment of `total` items over `weights`.
/// Ties in the remainder go to the lower index.
std::vector<int> apportion(int total, const std::vector<double>& weights);

/// Normalised class frequencies ∝ (rank+1)^(-exponent).
std::vector<double> power_law_weights(int num_classes, double exponent);

/// Exponent giving a head:tail frequency ratio of `ratio` over A classes.
double exponent_for_head_tail_ratio(int num_classes, double ratio);

Dataset generate_dataset(const DatasetSpec& spec);

/// Line-oriented file: a JSON header then one JSON array per record.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
std::string serialize_dataset(const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const std::string& text);

std::string dataset_spec_to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const std::string& text);

}  // namespace predbranch

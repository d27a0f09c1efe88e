// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Agglomerative clustering of per-class average prediction vectors into
// label groups.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "predbranch/baseline.hpp"
#include "predbranch/config.hpp"
#include "predbranch/numerics.hpp"

namespace predbranch {

/// Disjoint exact cover of {0..A−1}. Group 0 contains the most frequent
/// class; the remaining groups are ordered by their smallest member.
class GroupPartition {
 public:
  GroupPartition() = default;
  /// Validates the cover and builds the index maps; throws InvalidArgument.
  GroupPartition(int num_classes, std::vector<std::vector<int>> groups, Linkage linkage = Linkage::kAverage,
                 Metric metric = Metric::kEuclidean);

  /// Single group holding every class.
  static GroupPartition trivial(int num_classes);

  std::size_t num_groups() const { return groups_.size(); }
  std::size_t num_classes() const { return group_of_.size(); }
  const std::vector<std::vector<int>>& groups() const { return groups_; }
  const std::vector<int>& group(std::size_t b) const { return groups_.at(b); }
  int group_of(int cls) const { return group_of_.at(static_cast<std::size_t>(cls)); }
  int local_index(int cls) const { return local_of_.at(static_cast<std::size_t>(cls)); }
  int global_index(std::size_t group, std::size_t local) const { return groups_.at(group).at(local); }
  Linkage linkage() const { return linkage_; }
  Metric metric() const { return metric_; }

  friend bool operator==(const GroupPartition&, const GroupPartition&) = default;

 private:
  std::vector<std::vector<int>> groups_;
  std::vector<int> group_of_;
  std::vector<int> local_of_;
  Linkage linkage_ = Linkage::kAverage;
  Metric metric_ = Metric::kEuclidean;
};

double pairwise_distance(std::span<const double> a, std::span<const double> b, Metric metric);

/// Clusters the rows of `points` into `num_groups` clusters. Among equal
/// linkage distances the pair with the lexicographically smallest
/// (min-member, min-member) key merges first. Returns groups of sorted
/// indices, ordered by smallest member.
std::vector<std::vector<int>> agglomerate(const Mat& points, int num_groups, Linkage linkage, Metric metric);

/// Groups the avg_prob rows of `stats`; group 0 holds the class with the
/// largest support (lowest index on ties).
GroupPartition cluster_predicates(const ClassStats& stats, int num_groups, Linkage linkage = Linkage::kAverage,
                                  Metric metric = Metric::kEuclidean);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Label vector (group id per class) of a partition.
std::vector<int> labels_of(const GroupPartition& p);

std::string partition_to_json(const GroupPartition& p);
GroupPartition partition_from_json(const std::string& text);

}  // namespace predbranch

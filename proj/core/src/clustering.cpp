// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "predbranch/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "json_io.hpp"
#include "predbranch/errors.hpp"

namespace predbranch {
namespace {

using detail::Json;

struct Cluster {
  std::vector<int> members;  // sorted
  bool alive = true;
};

}  // namespace

GroupPartition::GroupPartition(int num_classes, std::vector<std::vector<int>> groups, Linkage linkage, Metric metric)
    : groups_(std::move(groups)), linkage_(linkage), metric_(metric) {
  if (num_classes < 1) throw InvalidArgument("GroupPartition: num_classes must be >= 1");
  const auto A = static_cast<std::size_t>(num_classes);
  group_of_.assign(A, -1);
  local_of_.assign(A, -1);
  for (std::size_t b = 0; b < groups_.size(); ++b) {
    auto& g = groups_[b];
    if (g.empty()) throw InvalidArgument("GroupPartition: group " + std::to_string(b) + " is empty");
    if (!std::is_sorted(g.begin(), g.end())) throw InvalidArgument("GroupPartition: groups must be sorted");
    for (std::size_t l = 0; l < g.size(); ++l) {
      const int c = g[l];
      if (c < 0 || static_cast<std::size_t>(c) >= A) {
        throw InvalidArgument("GroupPartition: class " + std::to_string(c) + " out of range");
      }
      if (group_of_[static_cast<std::size_t>(c)] != -1) {
        throw InvalidArgument("GroupPartition: class " + std::to_string(c) + " appears twice");
      }
      group_of_[static_cast<std::size_t>(c)] = static_cast<int>(b);
      local_of_[static_cast<std::size_t>(c)] = static_cast<int>(l);
    }
  }
  for (std::size_t c = 0; c < A; ++c) {
    if (group_of_[c] == -1) throw InvalidArgument("GroupPartition: class " + std::to_string(c) + " is not covered");
  }
}

GroupPartition GroupPartition::trivial(int num_classes) {
  std::vector<int> all(static_cast<std::size_t>(std::max(num_classes, 0)));
  std::iota(all.begin(), all.end(), 0);
  return GroupPartition(num_classes, {all});
}

double pairwise_distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  switch (metric) {
    case Metric::kEuclidean: return distance(a, b);
    case Metric::kSquaredEuclidean: return squared_distance(a, b);
    case Metric::kCityBlock: {
      if (a.size() != b.size()) throw InvalidArgument("cityblock distance: length mismatch");
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
      return s;
    }
  }
  return 0.0;
}

std::vector<std::vector<int>> agglomerate(const Mat& points, int num_groups, Linkage linkage, Metric metric) {
  const std::size_t n = points.rows();
  if (num_groups < 1 || static_cast<std::size_t>(num_groups) > n) {
    throw InvalidArgument("agglomerate: num_groups must lie in [1, " + std::to_string(n) + "]");
  }
  // link(i, j) keeps the sum (average), min (single) or max (complete) of
  // pairwise point distances between live clusters i and j, indexed by slot.
  Mat link(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = pairwise_distance(points.row(i), points.row(j), metric);
      link(i, j) = d;
      link(j, i) = d;
    }
  }
  std::vector<Cluster> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i].members = {static_cast<int>(i)};

  auto linkage_distance = [&](std::size_t i, std::size_t j) {
    if (linkage == Linkage::kAverage) {
      return link(i, j) / static_cast<double>(clusters[i].members.size() * clusters[j].members.size());
    }
    return link(i, j);
  };

  std::size_t alive = n;
  while (alive > static_cast<std::size_t>(num_groups)) {
    std::size_t best_i = 0, best_j = 0;
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> best_key{std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};
    for (std::size_t i = 0; i < n; ++i) {
      if (!clusters[i].alive) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!clusters[j].alive) continue;
        const double d = linkage_distance(i, j);
        const int ki = clusters[i].members.front();
        const int kj = clusters[j].members.front();
        const std::pair<int, int> key{std::min(ki, kj), std::max(ki, kj)};
        if (d < best || (d == best && key < best_key)) {
          best = d;
          best_key = key;
          best_i = i;
          best_j = j;
        }
      }
    }
    // Merge j into i.
    for (std::size_t k = 0; k < n; ++k) {
      if (!clusters[k].alive || k == best_i || k == best_j) continue;
      double merged = 0.0;
      switch (linkage) {
        case Linkage::kAverage: merged = link(best_i, k) + link(best_j, k); break;
        case Linkage::kSingle: merged = std::min(link(best_i, k), link(best_j, k)); break;
        case Linkage::kComplete: merged = std::max(link(best_i, k), link(best_j, k)); break;
      }
      link(best_i, k) = merged;
      link(k, best_i) = merged;
    }
    auto& dst = clusters[best_i].members;
    const auto& src = clusters[best_j].members;
    std::vector<int> joined;
    std::merge(dst.begin(), dst.end(), src.begin(), src.end(), std::back_inserter(joined));
    dst = std::move(joined);
    clusters[best_j].alive = false;
    --alive;
  }

  std::vector<std::vector<int>> groups;
  for (auto& c : clusters) {
    if (c.alive) groups.push_back(std::move(c.members));
  }
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return groups;
}

GroupPartition cluster_predicates(const ClassStats& stats, int num_groups, Linkage linkage, Metric metric) {
  const auto A = static_cast<int>(stats.num_classes());
  if (num_groups < 1 || num_groups > A) {
    throw InvalidArgument("cluster_predicates: num_groups " + std::to_string(num_groups) + " outside [1, " +
                          std::to_string(A) + "]");
  }
  const auto supported = std::count_if(stats.support.begin(), stats.support.end(), [](int s) { return s > 0; });
  if (num_groups > supported) {
    throw InvalidArgument("cluster_predicates: num_groups exceeds the number of classes with training support");
  }
  auto groups = agglomerate(stats.avg_prob, num_groups, linkage, metric);
  const int head = static_cast<int>(
      std::max_element(stats.support.begin(), stats.support.end()) - stats.support.begin());
  auto it = std::find_if(groups.begin(), groups.end(),
                         [&](const auto& g) { return std::binary_search(g.begin(), g.end(), head); });
  std::rotate(groups.begin(), it, it + 1);
  return GroupPartition(A, std::move(groups), linkage, metric);
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InvalidArgument("adjusted_rand_index: labelings differ in length");
  const auto n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [_, v] : table) index += pairs(v);
  for (const auto& [_, v] : rows) sum_rows += pairs(v);
  for (const auto& [_, v] : cols) sum_cols += pairs(v);
  const double expected = sum_rows * sum_cols / pairs(n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both labelings trivial
  return (index - expected) / (max_index - expected);
}

std::vector<int> labels_of(const GroupPartition& p) {
  std::vector<int> labels(p.num_classes());
  for (std::size_t c = 0; c < labels.size(); ++c) labels[c] = p.group_of(static_cast<int>(c));
  return labels;
}

std::string partition_to_json(const GroupPartition& p) {
  Json j = Json::object();
  j["groups"] = p.groups();
  j["linkage"] = std::string(to_string(p.linkage()));
  j["metric"] = std::string(to_string(p.metric()));
  return detail::dump(j);
}

GroupPartition partition_from_json(const std::string& text) {
  const Json j = detail::parse(text, "partition");
  const Json& groups_json = detail::member(j, "groups", "partition");
  if (!groups_json.is_array()) throw FormatError("partition: 'groups' must be an array");
  std::vector<std::vector<int>> groups;
  int max_class = -1;
  for (std::size_t b = 0; b < groups_json.size(); ++b) {
    groups.push_back(detail::ints_from_json(groups_json[b], "partition.groups[" + std::to_string(b) + "]"));
    for (int c : groups.back()) max_class = std::max(max_class, c);
  }
  Linkage linkage = Linkage::kAverage;
  Metric metric = Metric::kEuclidean;
  try {
    if (j.contains("linkage")) linkage = linkage_from_string(detail::string_member(j, "linkage", "partition"));
    if (j.contains("metric")) metric = metric_from_string(detail::string_member(j, "metric", "partition"));
    return GroupPartition(max_class + 1, std::move(groups), linkage, metric);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("partition: ") + e.what());
  }
}

}  // namespace predbranch

// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "predbranch/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "predbranch/errors.hpp"
#include "predbranch/textio.hpp"

namespace predbranch {

BatchStream::BatchStream(std::size_t n, std::uint64_t seed) : rng_(seed), order_(n) {
  if (n == 0) throw InvalidArgument("BatchStream: empty index range");
  reshuffle();
}

void BatchStream::reshuffle() {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  rng_.shuffle(std::span<std::size_t>(order_));
}

std::vector<std::size_t> BatchStream::next(std::size_t batch_size) {
  if (batch_size == 0) throw InvalidArgument("BatchStream: batch size must be positive");
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  while (out.size() < batch_size) {
    out.push_back(order_[pos_++]);
    if (pos_ == order_.size()) {
      pos_ = 0;
      ++epoch_;
      reshuffle();
    }
  }
  return out;
}

double lr_at(int iter, const TrainConfig& cfg) {
  if (iter < 0) throw InvalidArgument("lr_at: negative iteration");
  if (iter < cfg.warmup_iters) {
    return cfg.base_lr * static_cast<double>(iter) / static_cast<double>(cfg.warmup_iters);
  }
  double lr = cfg.base_lr;
  if (cfg.lr_decay_every > 0) {
    lr *= std::pow(cfg.lr_decay_factor, (iter - cfg.warmup_iters) / cfg.lr_decay_every);
  }
  return lr;
}

std::string LossLog::to_csv() const {
  std::ostringstream out;
  out << "iter,L,L_rel_root";
  for (const auto& name : head_names) out << ",L_rel_" << name;
  out << ",L_mem_e,L_mem_u,lr\n";
  for (const auto& r : rows) {
    out << r.iter << ',' << format_double(r.total) << ',' << format_double(r.rel_root);
    for (double h : r.rel_heads) out << ',' << format_double(h);
    out << ',' << format_double(r.mem_e) << ',' << format_double(r.mem_u) << ',' << format_double(r.lr) << '\n';
  }
  return out.str();
}

double LossLog::mean_total(std::size_t from, std::size_t to) const {
  if (from >= to || to > rows.size()) throw InvalidArgument("LossLog::mean_total: bad range");
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += rows[i].total;
  return s / static_cast<double>(to - from);
}

Checkpoint pretrain_checkpoint(const Dataset& ds, const TrainConfig& cfg) {
  Checkpoint ck;
  ck.config = cfg;
  ck.baseline = pretrain_baseline(ds, cfg);
  ck.stats = class_statistics(ds, ck.baseline);
  ck.metrics["baseline_train_accuracy"] = accuracy(ds.train(), ck.baseline);
  return ck;
}

Checkpoint train_predictor(const Dataset& ds, const ClassStats& stats, const GroupPartition& partition,
                           const TrainConfig& cfg, LossLog* log, const BaselineParams* baseline) {
  cfg.validate();
  ds.validate();
  const auto& train = ds.train();
  if (train.empty()) throw InvalidArgument("train_predictor: empty training split");
  if (stats.num_classes() != static_cast<std::size_t>(ds.spec.num_classes) ||
      stats.avg_e.cols() != static_cast<std::size_t>(ds.spec.feature_dim)) {
    throw InvalidArgument("train_predictor: class statistics do not match the dataset");
  }
  if (cfg.branch && partition.num_classes() != stats.num_classes()) {
    throw InvalidArgument("train_predictor: partition does not cover the dataset's classes");
  }

  Checkpoint ck;
  ck.config = cfg;
  ck.stats = stats;
  if (baseline != nullptr) {
    ck.baseline = *baseline;
  } else {
    ck.baseline = BaselineParams{Mat(stats.num_classes(), stats.avg_e.cols()),
                                 Mat(stats.num_classes(), stats.avg_e.cols())};
  }
  PredictorParams params = init_predictor(partition, stats, cfg.branch, cfg.knowledge_transfer, cfg.kt,
                                          derive_seed(cfg.seed, "init/predictor"));
  if (cfg.branch) ck.partition = partition;

  if (log != nullptr) {
    log->head_names.clear();
    log->rows.clear();
    for (const auto& h : params.heads) log->head_names.push_back(h.name);
  }
  const LossOptions opts = LossOptions::from(cfg);
  auto refs = params.parameters();
  SgdOptimizer opt(cfg.momentum);
  BatchStream batches(train.size(), derive_seed(cfg.seed, "batches/predictor"));
  GradTape tape;
  double recent = 0.0;
  int recent_n = 0;
  for (int it = 0; it < cfg.total_iters; ++it) {
    const auto batch = batches.next(static_cast<std::size_t>(cfg.batch_size));
    tape.zero();
    const double w = 1.0 / static_cast<double>(batch.size());
    LossLogRow row;
    row.iter = it;
    row.rel_heads.assign(params.heads.size(), 0.0);
    for (std::size_t idx : batch) {
      const LossBreakdown b = total_loss(train[idx], params, opts, &tape, w);
      row.total += w * b.total;
      row.rel_root += w * b.rel_root;
      for (std::size_t h = 0; h < b.rel_heads.size(); ++h) row.rel_heads[h] += w * b.rel_heads[h];
      row.mem_e += w * b.mem_e;
      row.mem_u += w * b.mem_u;
    }
    if (!std::isfinite(row.total)) {
      throw NumericalFailure("train_predictor: non-finite loss at iteration " + std::to_string(it));
    }
    row.lr = lr_at(it, cfg);
    opt.step(refs, tape, row.lr);
    if (it + 100 >= cfg.total_iters) {
      recent += row.total;
      ++recent_n;
    }
    if (log != nullptr) log->rows.push_back(std::move(row));
  }
  ck.iteration = cfg.total_iters;
  if (recent_n > 0) ck.metrics["final_loss"] = recent / recent_n;
  if (params.knowledge_transfer) {
    ck.metrics["memory_separated_fraction_e"] =
        memory_geometry(train, params.memory_e, Stream::kContext).separated_fraction(10);
  }
  ck.predictor = std::move(params);
  return ck;
}

Checkpoint train_from_pretrained(const Dataset& ds, const Checkpoint& pretrained, const TrainConfig& cfg,
                                 LossLog* log) {
  const ClassStats stats = pretrained.stats ? *pretrained.stats : class_statistics(ds, pretrained.baseline);
  GroupPartition partition = GroupPartition::trivial(ds.spec.num_classes);
  if (cfg.branch) {
    partition = pretrained.partition ? *pretrained.partition
                                     : cluster_predicates(stats, cfg.num_groups, cfg.linkage, cfg.metric);
  }
  return train_predictor(ds, stats, partition, cfg, log, &pretrained.baseline);
}

Checkpoint train_pipeline(const Dataset& ds, const TrainConfig& cfg, LossLog* log) {
  return train_from_pretrained(ds, pretrain_checkpoint(ds, cfg), cfg, log);
}

double MemoryGeometry::separated_fraction(int min_support) const {
  int eligible = 0;
  int good = 0;
  for (std::size_t c = 0; c < support.size(); ++c) {
    if (support[c] < min_support) continue;
    ++eligible;
    if (own_distance[c] < other_distance[c]) ++good;
  }
  return eligible == 0 ? 0.0 : static_cast<double>(good) / eligible;
}

MemoryGeometry memory_geometry(const std::vector<RelationSample>& samples, const Memory& mem, Stream stream) {
  const std::size_t A = mem.V.rows();
  MemoryGeometry g{std::vector<int>(A, 0), std::vector<double>(A, 0.0), std::vector<double>(A, 0.0)};
  if (A < 2) throw InvalidArgument("memory_geometry: need at least two memory rows");
  for (const auto& s : samples) {
    const Vec& x = stream == Stream::kContext ? s.e : s.u;
    const auto cls = static_cast<std::size_t>(s.g);
    if (cls >= A) throw InvalidArgument("memory_geometry: label out of range");
    double other = 0.0;
    for (std::size_t i = 0; i < A; ++i) {
      const double d = distance(x.span(), mem.V.row(i));
      if (i == cls) {
        g.own_distance[cls] += d;
      } else {
        other += d;
      }
    }
    g.other_distance[cls] += other / static_cast<double>(A - 1);
    ++g.support[cls];
  }
  for (std::size_t c = 0; c < A; ++c) {
    if (g.support[c] == 0) continue;
    g.own_distance[c] /= g.support[c];
    g.other_distance[c] /= g.support[c];
  }
  return g;
}

double drift_fraction(const MemoryGeometry& before, const MemoryGeometry& after, int min_support) {
  if (before.support != after.support) throw InvalidArgument("drift_fraction: geometries over different samples");
  int eligible = 0;
  int shrank = 0;
  for (std::size_t c = 0; c < before.support.size(); ++c) {
    if (before.support[c] < min_support) continue;
    ++eligible;
    if (after.own_distance[c] < before.own_distance[c]) ++shrank;
  }
  return eligible == 0 ? 0.0 : static_cast<double>(shrank) / eligible;
}

}  // namespace predbranch

// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "predbranch/branching.hpp"
#include "predbranch/clustering.hpp"
#include "predbranch/evalreport.hpp"
#include "predbranch/gradsuite.hpp"
#include "predbranch/random.hpp"
#include "predbranch/synthdata.hpp"
#include "predbranch/textio.hpp"
#include "predbranch/tolerances.hpp"
#include "predbranch/trainer.hpp"
#include "predbranch/transfer.hpp"

namespace pb = predbranch;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) { return pb::format_double(v); }

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_case;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& c : pb::run_grad_suite(seed)) {
      if (c.result.max_rel_error >= worst) {
        worst = c.result.max_rel_error;
        worst_case = c.name;
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst <= pb::tol::kGradCheckMaxRelError && t < 30.0,
          "worst relative error " + fmt_short(worst) + " (" + worst_case + "), " + fmt_short(t) + " s"};
}

Outcome forward_oracle() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const pb::GradInstance inst = pb::random_grad_instance(pb::derive_seed(seed, "acceptance/forward"));
    const pb::PredictorParams& p = inst.params;
    std::vector<const pb::ClassifierHead*> heads{&*p.root};
    for (const auto& h : p.heads) heads.push_back(&h);
    for (const auto* h : heads) {
      const pb::HeadTrace tr = pb::branch_forward(inst.sample, *h, p.memory_e, p.memory_u, p.kt, true);
      const auto o = oracle::head_forward(inst.sample, *h, p.memory_e.V, p.memory_u.V, p.kt.alpha, true);
      for (std::size_t j = 0; j < o.p.size(); ++j) worst = std::max(worst, std::abs(tr.p[j] - o.p[j]));
    }
  }
  return {worst <= pb::tol::kForwardOracle, "max |difference| " + fmt_short(worst) + " over 100 instances"};
}

Outcome metric_oracle() {
  pb::Rng rng(pb::derive_seed(0, "acceptance/metric"));
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    int A = 0;
    const auto scenes = oracle::random_scenes(rng, A);
    const int K = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(4 * A)));
    const pb::RecallResult got = pb::recall_at_k(scenes, A, K);
    const pb::RecallResult want = oracle::brute_force_recall(scenes, A, K);
    if (got.recall != want.recall || got.mean_recall() != oracle::brute_force_mean_recall(want)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 200 instances"};
}

Outcome closed_forms() {
  pb::KTConfig kt;
  const pb::Memory two{pb::Mat(2, 1, std::vector<double>{0.0, 100.0}), true};
  const double mem = pb::memory_loss(pb::Vec{0.0}, two, 0, kt);

  const pb::GroupPartition part(8, {{0, 1, 2, 3, 4}, {5, 6, 7}});
  const pb::ClassifierHead h = pb::make_head(pb::HeadKind::kGroup, part, 0, 3, true);
  pb::RelationSample s{pb::Vec{0.3, -0.2, 1.0}, pb::Vec{0.5, 0.5, -1.0}, pb::Vec(8), 2, 0};
  const pb::Memory me{pb::Mat(8, 3, 0.5), true}, mu{pb::Mat(8, 3, -0.5), true};
  const double rel = pb::relation_loss(pb::branch_forward(s, h, me, mu, kt, true), h, 2);
  const double want_rel = 5.0 * std::log(5.0);
  const bool ok = std::abs(mem - 0.3) <= pb::tol::kClosedFormLoss &&
                  std::abs(rel - want_rel) <= pb::tol::kClosedFormRelationLoss;
  return {ok, "memory_loss " + fmt(mem) + " (want 0.3), relation_loss " + fmt(rel) + " (want " + fmt(want_rel) + ")"};
}

Outcome clustering_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  int recovered = 0;
  std::string aris;
  for (std::uint64_t i = 0; i < 10; ++i) {
    pb::DatasetSpec spec;
    spec.seed = pb::derive_seed(i, "acceptance/clustering");
    const pb::Dataset ds = pb::generate_dataset(spec);
    pb::TrainConfig cfg;
    cfg.seed = spec.seed;
    const pb::Checkpoint pre = pb::pretrain_checkpoint(ds, cfg);
    const pb::GroupPartition p = pb::cluster_predicates(*pre.stats, 2);
    const double ari = pb::adjusted_rand_index(pb::labels_of(p), ds.planted_cluster);
    if (ari == 1.0) ++recovered;
    aris += (i == 0 ? "" : " ") + fmt_short(ari);
  }
  const double t = seconds_since(t0);
  return {recovered >= 9 && t < 10.0,
          std::to_string(recovered) + "/10 seeds with ARI 1 [" + aris + "], " + fmt_short(t) + " s"};
}

Outcome ablation_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  int bottom_wins = 0, mr_wins = 0;
  std::string rows;
  for (std::uint64_t i = 0; i < 5; ++i) {
    pb::DatasetSpec spec;
    spec.seed = pb::derive_seed(i, "acceptance/ablation/data");
    const pb::Dataset ds = pb::generate_dataset(spec);
    pb::TrainConfig base;
    const auto reports = pb::ablation_run(ds, base, {pb::derive_seed(i, "acceptance/ablation/train")});
    const pb::KReport& b = reports[0].at(10);
    const pb::KReport& bk = reports[3].at(10);
    if (bk.groups.bottom > b.groups.bottom) ++bottom_wins;
    if (bk.mean_recall >= b.mean_recall) ++mr_wins;
    rows += " [seed " + std::to_string(i) + ": mR " + fmt_short(b.mean_recall) + " -> " + fmt_short(bk.mean_recall) +
            ", bottom " + fmt_short(b.groups.bottom) + " -> " + fmt_short(bk.groups.bottom) + "]";
  }
  const double t = seconds_since(t0);
  return {bottom_wins >= 4 && mr_wins >= 4 && t < 300.0,
          "bottom-group wins " + std::to_string(bottom_wins) + "/5, mR wins " + std::to_string(mr_wins) + "/5, " +
              fmt_short(t) + " s;" + rows};
}

/// Shared by the memory and determinism criteria.
struct TrainedRun {
  pb::Dataset ds;
  pb::TrainConfig cfg;
  pb::Checkpoint ck;
};

TrainedRun default_run() {
  pb::DatasetSpec spec;
  spec.seed = pb::derive_seed(0, "acceptance/run/data");
  TrainedRun r{pb::generate_dataset(spec), pb::TrainConfig{}, {}};
  r.cfg.seed = pb::derive_seed(0, "acceptance/run/train");
  r.ck = pb::train_pipeline(r.ds, r.cfg);
  return r;
}

Outcome memory_behaviour(const TrainedRun& run) {
  const double fe =
      pb::memory_geometry(run.ds.train(), run.ck.predictor->memory_e, pb::Stream::kContext).separated_fraction(10);
  const double fu =
      pb::memory_geometry(run.ds.train(), run.ck.predictor->memory_u, pb::Stream::kUnion).separated_fraction(10);
  return {fe >= 0.8 && fu >= 0.8, "separated fraction e " + fmt_short(fe) + ", u " + fmt_short(fu)};
}

Outcome routing_invariants() {
  int hard_bad = 0;
  double worst_sum = 0.0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const pb::GradInstance inst = pb::random_grad_instance(pb::derive_seed(i, "acceptance/routing"));
    const pb::RoutedScores hard = pb::route_and_score(inst.sample, inst.params, pb::RoutingMode::kHard);
    const int top = static_cast<int>(pb::argmax(hard.scores.span()));
    if (inst.params.partition.group_of(top) != hard.chosen) ++hard_bad;
    const pb::RoutedScores soft = pb::route_and_score(inst.sample, inst.params, pb::RoutingMode::kSoft);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(soft.scores.begin(), soft.scores.end(), 0.0) - 1.0));
  }
  return {hard_bad == 0 && worst_sum <= pb::tol::kProbabilitySum,
          std::to_string(hard_bad) + " hard-mode violations, max |soft sum - 1| " + fmt_short(worst_sum) +
              " over 10000 instances"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const char* name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
  };
  report(1, "gradient suite", gradient_suite);
  report(2, "forward oracle", forward_oracle);
  report(3, "metric oracle", metric_oracle);
  report(4, "closed-form losses", closed_forms);
  report(5, "clustering recovery", clustering_recovery);
  report(6, "ablation trend", ablation_trend);
  std::optional<TrainedRun> run;
  report(7, "memory geometry", [&] {
    run = default_run();
    return memory_behaviour(*run);
  });
  report(8, "determinism", [&] {
    if (!run) run = default_run();
    const TrainedRun again = default_run();
    const std::string a = pb::serialize_checkpoint(run->ck), b = pb::serialize_checkpoint(again.ck);
    const std::string ra =
        pb::report_csv({pb::evaluate_checkpoint(run->ck, run->ds, pb::Split::kTest, run->cfg.ks, "branch_kt")});
    const std::string rb =
        pb::report_csv({pb::evaluate_checkpoint(again.ck, again.ds, pb::Split::kTest, again.cfg.ks, "branch_kt")});
    const bool data_same = pb::serialize_dataset(run->ds) == pb::serialize_dataset(again.ds);
    return Outcome{a == b && ra == rb && data_same,
                   std::string("dataset ") + (data_same ? "identical" : "differs") + ", checkpoint " +
                       (a == b ? "identical" : "differs") + " (" + std::to_string(a.size()) + " bytes), report " +
                       (ra == rb ? "identical" : "differs")};
  });
  report(9, "routing invariants", routing_invariants);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

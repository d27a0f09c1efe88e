// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "predbranch/errors.hpp"
#include "predbranch/evalreport.hpp"
#include "test_util.hpp"

namespace predbranch {
namespace {

TEST(Recall, HandExample) {
  const std::vector<SceneScores> scenes{{{Vec{0.9, 0.1}, Vec{0.8, 0.5}}, {0, 1}}};
  const RecallResult r = recall_at_k(scenes, 2, 2);
  EXPECT_EQ(r.recall, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(r.support, (std::vector<int>{1, 1}));
  EXPECT_EQ(recall_at_k(scenes, 2, 3).recall, (std::vector<double>{1.0, 1.0}));
}

TEST(Recall, TiesGoToLowerLabelThenLowerCandidate) {
  // All scores equal: order is (c0,l0), (c1,l0), (c0,l1), (c1,l1).
  const std::vector<SceneScores> scenes{{{Vec{0.5, 0.5}, Vec{0.5, 0.5}}, {1, 0}}};
  EXPECT_EQ(recall_at_k(scenes, 2, 2).recall, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(recall_at_k(scenes, 2, 3).recall, (std::vector<double>{1.0, 1.0}));
}

TEST(Recall, LargeKRecallsEverything) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    int A = 0;
    const auto scenes = oracle::random_scenes(rng, A);
    const RecallResult r = recall_at_k(scenes, A, 4 * A);
    for (std::size_t c = 0; c < r.support.size(); ++c) {
      EXPECT_EQ(r.recall[c], r.support[c] > 0 ? 1.0 : 0.0);
    }
  }
}

TEST(Recall, MatchesBruteForceExactly) {
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    int A = 0;
    const auto scenes = oracle::random_scenes(rng, A);
    const int K = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(4 * A)));
    const RecallResult got = recall_at_k(scenes, A, K);
    const RecallResult want = oracle::brute_force_recall(scenes, A, K);
    EXPECT_EQ(got.hits, want.hits);
    EXPECT_EQ(got.support, want.support);
    EXPECT_EQ(got.recall, want.recall);
    EXPECT_EQ(got.mean_recall(), oracle::brute_force_mean_recall(want));
  }
}

TEST(Recall, MonotoneInK) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    int A = 0;
    const auto scenes = oracle::random_scenes(rng, A);
    RecallResult prev = recall_at_k(scenes, A, 1);
    for (int K = 2; K <= 4 * A; ++K) {
      const RecallResult cur = recall_at_k(scenes, A, K);
      for (std::size_t c = 0; c < cur.recall.size(); ++c) EXPECT_GE(cur.recall[c], prev.recall[c]);
      prev = cur;
    }
  }
}

TEST(Recall, AbsentClassLeavesMeanRecall) {
  const std::vector<SceneScores> scenes{{{Vec{0.9, 0.1, 0.0}, Vec{0.8, 0.5, 0.0}}, {0, 1}}};
  const RecallResult r = recall_at_k(scenes, 3, 2);
  EXPECT_EQ(r.support[2], 0);
  EXPECT_DOUBLE_EQ(r.mean_recall(), 0.5);
}

TEST(Recall, Errors) {
  const std::vector<SceneScores> scenes{{{Vec{0.9, 0.1}}, {0}}};
  EXPECT_THROW(recall_at_k(scenes, 2, 0), InvalidArgument);
  EXPECT_THROW(recall_at_k(scenes, 3, 1), InvalidArgument);
  const std::vector<SceneScores> bad_label{{{Vec{0.9, 0.1}}, {2}}};
  EXPECT_THROW(recall_at_k(bad_label, 2, 1), InvalidArgument);
}

TEST(FrequencyGroups, Sizes) {
  auto sizes = [](int A) {
    std::vector<int> f(static_cast<std::size_t>(A));
    std::iota(f.rbegin(), f.rend(), 1);
    const FrequencyGroups g = frequency_groups(f);
    return std::vector<std::size_t>{g.top.size(), g.middle.size(), g.bottom.size()};
  };
  EXPECT_EQ(sizes(50), (std::vector<std::size_t>{10, 25, 15}));
  EXPECT_EQ(sizes(20), (std::vector<std::size_t>{4, 10, 6}));
  EXPECT_EQ(sizes(3), (std::vector<std::size_t>{0, 3, 0}));
}

TEST(FrequencyGroups, RanksByFrequencyWithIndexTieBreak) {
  const FrequencyGroups g = frequency_groups({5, 9, 5, 1, 7, 5, 0, 2, 5, 3});
  EXPECT_EQ(g.top, (std::vector<int>{1, 4}));
  EXPECT_EQ(g.bottom, (std::vector<int>{7, 3, 6}));
  EXPECT_EQ(g.middle, (std::vector<int>{0, 2, 5, 8, 9}));
}

TEST(GroupReport, UniformRecall) {
  RecallResult r{std::vector<int>(20, 1), std::vector<int>(20, 4), std::vector<double>(20, 0.25)};
  std::vector<int> f(20);
  std::iota(f.begin(), f.end(), 0);
  const GroupMeans m = group_report(r, frequency_groups(f));
  EXPECT_DOUBLE_EQ(m.top, 0.25);
  EXPECT_DOUBLE_EQ(m.middle, 0.25);
  EXPECT_DOUBLE_EQ(m.bottom, 0.25);
}

TEST(GroupReport, ExactPerClassRecomputation) {
  Rng rng(4);
  const int A = 20;
  RecallResult r{std::vector<int>(A), std::vector<int>(A), std::vector<double>(A)};
  std::vector<int> f(A);
  for (int c = 0; c < A; ++c) {
    r.support[c] = static_cast<int>(rng.uniform_index(4));
    r.hits[c] = r.support[c] == 0 ? 0 : static_cast<int>(rng.uniform_index(static_cast<std::size_t>(r.support[c]) + 1));
    r.recall[c] = r.support[c] == 0 ? 0.0 : static_cast<double>(r.hits[c]) / r.support[c];
    f[c] = static_cast<int>(rng.uniform_index(1000));
  }
  const FrequencyGroups groups = frequency_groups(f);
  const GroupMeans m = group_report(r, groups);
  auto mean_of = [&](const std::vector<int>& cls) {
    double s = 0.0;
    int n = 0;
    for (int c : cls) {
      if (r.support[c] == 0) continue;
      s += r.recall[c];
      ++n;
    }
    return n == 0 ? 0.0 : s / n;
  };
  EXPECT_DOUBLE_EQ(m.top, mean_of(groups.top));
  EXPECT_DOUBLE_EQ(m.middle, mean_of(groups.middle));
  EXPECT_DOUBLE_EQ(m.bottom, mean_of(groups.bottom));
}

class EvalSmall : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ds_ = new Dataset(generate_dataset(testutil::small_spec(5)));
    cfg_ = new TrainConfig;
    cfg_->total_iters = 150;
    cfg_->warmup_iters = 20;
    cfg_->seed = 77;
    cfg_->ks = {1, 5, 10};
  }
  static void TearDownTestSuite() {
    delete ds_;
    delete cfg_;
  }
  static Dataset* ds_;
  static TrainConfig* cfg_;
};
Dataset* EvalSmall::ds_ = nullptr;
TrainConfig* EvalSmall::cfg_ = nullptr;

TEST_F(EvalSmall, ReportInvariants) {
  const Checkpoint ck = train_pipeline(*ds_, *cfg_);
  const EvalReport r = evaluate_checkpoint(ck, *ds_, Split::kTest, cfg_->ks, "x");
  ASSERT_EQ(r.per_k.size(), 3u);
  for (const auto& kr : r.per_k) {
    for (double v : kr.result.recall) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(kr.mean_recall, kr.result.mean_recall());
  }
  EXPECT_LE(r.at(1).mean_recall, r.at(10).mean_recall);
  EXPECT_THROW(r.at(2), InvalidArgument);
  EXPECT_EQ(r.train_frequency, ds_->counts(Split::kTrain));
  const std::string csv = report_csv({r});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(csv.rfind("config_name,seed,K,mR,top_mean,middle_mean,bottom_mean,recall_0,", 0), 0u);
}

TEST_F(EvalSmall, EvaluationIsDeterministic) {
  const Checkpoint ck = train_pipeline(*ds_, *cfg_);
  EXPECT_EQ(report_csv({evaluate_checkpoint(ck, *ds_, Split::kTest, cfg_->ks, "a")}),
            report_csv({evaluate_checkpoint(ck, *ds_, Split::kTest, cfg_->ks, "a")}));
}

TEST_F(EvalSmall, BaselineOnlyCheckpointEvaluates) {
  const Checkpoint pre = pretrain_checkpoint(*ds_, *cfg_);
  const EvalReport r = evaluate_checkpoint(pre, *ds_, Split::kTest, {10}, "pre");
  EXPECT_GT(r.at(10).mean_recall, 0.0);
}

TEST_F(EvalSmall, AblationShapeAndBaselineRow) {
  const std::vector<std::uint64_t> seeds{3, 4};
  const auto reports = ablation_run(*ds_, *cfg_, seeds);
  ASSERT_EQ(reports.size(), 8u);
  const std::vector<std::string> names{"baseline", "branch", "kt", "branch_kt"};
  for (std::size_t i = 0; i < reports.size(); ++i) {
    EXPECT_EQ(reports[i].config_name, names[i % 4]);
    EXPECT_EQ(reports[i].seed, seeds[i / 4]);
  }

  TrainConfig base = *cfg_;
  base.seed = 4;
  const TrainConfig baseline_cfg = ablation_configs(base).front().second;
  EXPECT_FALSE(baseline_cfg.branch);
  EXPECT_FALSE(baseline_cfg.knowledge_transfer);
  const Checkpoint independent = train_pipeline(*ds_, baseline_cfg);
  const EvalReport want = evaluate_checkpoint(independent, *ds_, Split::kTest, baseline_cfg.ks, "baseline");
  EXPECT_EQ(report_csv_rows(reports[4]), report_csv_rows(want));
}

TEST(AblationConfigs, KnowledgeTransferOffZeroesLambda) {
  const auto cfgs = ablation_configs(TrainConfig{});
  ASSERT_EQ(cfgs.size(), 4u);
  EXPECT_EQ(cfgs[1].second.kt.lambda_mem, 0.0);
  EXPECT_TRUE(cfgs[1].second.branch);
  EXPECT_EQ(cfgs[3].second.kt.lambda_mem, 1.0);
  EXPECT_FALSE(cfgs[2].second.branch);
  EXPECT_TRUE(cfgs[2].second.knowledge_transfer);
}

}  // namespace
}  // namespace predbranch

// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "predbranch/clustering.hpp"
#include "predbranch/evalreport.hpp"
#include "predbranch/gradsuite.hpp"
#include "predbranch/random.hpp"

namespace pb = predbranch;

namespace {

pb::GradInstance instance(int P, int A) {
  pb::GradSuiteOptions opts;
  opts.feature_dim = P;
  opts.num_classes = A;
  opts.group_size = A / 2;
  return pb::random_grad_instance(1, opts);
}

void BM_PredictorForward(benchmark::State& state) {
  const auto inst = instance(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pb::predictor_forward(inst.sample, inst.params));
  }
}
BENCHMARK(BM_PredictorForward)->Args({16, 20})->Args({64, 50});

void BM_TotalLossBackward(benchmark::State& state) {
  const auto inst = instance(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  pb::GradTape tape;
  for (auto _ : state) {
    tape.zero();
    benchmark::DoNotOptimize(pb::total_loss(inst.sample, inst.params, pb::LossOptions{}, &tape));
  }
}
BENCHMARK(BM_TotalLossBackward)->Args({16, 20})->Args({64, 50});

void BM_Agglomerate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  pb::Rng rng(2);
  pb::Mat points(n, n);
  for (double& v : points.span()) v = rng.uniform01();
  for (auto _ : state) {
    benchmark::DoNotOptimize(pb::agglomerate(points, 2, pb::Linkage::kAverage, pb::Metric::kEuclidean));
  }
}
BENCHMARK(BM_Agglomerate)->Arg(20)->Arg(50)->Arg(150);

void BM_RecallAtK(benchmark::State& state) {
  const int A = 50;
  pb::Rng rng(3);
  std::vector<pb::SceneScores> scenes(static_cast<std::size_t>(state.range(0)));
  for (auto& sc : scenes) {
    for (int j = 0; j < 5; ++j) {
      pb::Vec s(A);
      for (double& v : s) v = rng.uniform01();
      sc.scores.push_back(s);
      sc.labels.push_back(static_cast<int>(rng.uniform_index(A)));
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(pb::recall_at_k(scenes, A, 100));
  }
}
BENCHMARK(BM_RecallAtK)->Arg(100)->Arg(1000);

}  // namespace
BENCHMARK_MAIN();

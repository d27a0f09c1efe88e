// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "predbranch/evalreport.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "predbranch/errors.hpp"
#include "predbranch/parallel.hpp"
#include "predbranch/textio.hpp"

namespace predbranch {
namespace {

double mean_over_supported(const RecallResult& r, const std::vector<int>& classes) {
  double sum = 0.0;
  int n = 0;
  for (int c : classes) {
    const auto i = static_cast<std::size_t>(c);
    if (r.support[i] == 0) continue;
    sum += r.recall[i];
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

}  // namespace

double RecallResult::mean_recall() const {
  std::vector<int> all(support.size());
  std::iota(all.begin(), all.end(), 0);
  return mean_over_supported(*this, all);
}

RecallResult recall_at_k(const std::vector<SceneScores>& scenes, int num_classes, int k) {
  if (k < 1) throw InvalidArgument("recall_at_k: K must be >= 1");
  if (num_classes < 1) throw InvalidArgument("recall_at_k: need at least one class");
  const auto A = static_cast<std::size_t>(num_classes);
  RecallResult r{std::vector<int>(A, 0), std::vector<int>(A, 0), std::vector<double>(A, 0.0)};
  for (const auto& scene : scenes) {
    if (scene.scores.size() != scene.labels.size()) {
      throw InvalidArgument("recall_at_k: scores and labels differ in length");
    }
    for (const auto& s : scene.scores) {
      if (s.size() != A) throw InvalidArgument("recall_at_k: score vector of the wrong length");
    }
    for (std::size_t i = 0; i < scene.labels.size(); ++i) {
      const int g = scene.labels[i];
      if (g < 0 || static_cast<std::size_t>(g) >= A) throw InvalidArgument("recall_at_k: label out of range");
      const double target = scene.scores[i][static_cast<std::size_t>(g)];
      // Rank = number of pairs ordered strictly before (i, g).
      std::size_t ahead = 0;
      for (std::size_t j = 0; j < scene.scores.size() && ahead < static_cast<std::size_t>(k); ++j) {
        const Vec& s = scene.scores[j];
        for (std::size_t l = 0; l < A; ++l) {
          if (s[l] > target || (s[l] == target && (static_cast<int>(l) < g || (static_cast<int>(l) == g && j < i)))) {
            ++ahead;
          }
        }
      }
      ++r.support[static_cast<std::size_t>(g)];
      if (ahead < static_cast<std::size_t>(k)) ++r.hits[static_cast<std::size_t>(g)];
    }
  }
  for (std::size_t c = 0; c < A; ++c) {
    if (r.support[c] > 0) r.recall[c] = static_cast<double>(r.hits[c]) / r.support[c];
  }
  return r;
}

FrequencyGroups frequency_groups(const std::vector<int>& frequency) {
  const int A = static_cast<int>(frequency.size());
  std::vector<int> order(frequency.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return frequency[static_cast<std::size_t>(a)] > frequency[static_cast<std::size_t>(b)];
  });
  const int n_top = A / 5;
  const int n_bottom = (3 * A) / 10;
  FrequencyGroups g;
  for (int r = 0; r < A; ++r) {
    const int c = order[static_cast<std::size_t>(r)];
    if (r < n_top) {
      g.top.push_back(c);
    } else if (r >= A - n_bottom) {
      g.bottom.push_back(c);
    } else {
      g.middle.push_back(c);
    }
  }
  return g;
}

GroupMeans group_report(const RecallResult& r, const FrequencyGroups& groups) {
  return GroupMeans{mean_over_supported(r, groups.top), mean_over_supported(r, groups.middle),
                    mean_over_supported(r, groups.bottom)};
}

const KReport& EvalReport::at(int k) const {
  for (const auto& kr : per_k) {
    if (kr.k == k) return kr;
  }
  throw InvalidArgument("EvalReport: K=" + std::to_string(k) + " was not evaluated");
}

std::vector<SceneScores> score_scenes(const std::vector<RelationSample>& samples,
                                      const std::function<Vec(const RelationSample&)>& score) {
  std::vector<std::size_t> scene_start;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i == 0 || samples[i].scene_id != samples[i - 1].scene_id) scene_start.push_back(i);
  }
  scene_start.push_back(samples.size());
  std::vector<SceneScores> scenes(scene_start.size() - 1);
  parallel_for(scenes.size(), [&](std::size_t s) {
    for (std::size_t i = scene_start[s]; i < scene_start[s + 1]; ++i) {
      scenes[s].scores.push_back(score(samples[i]));
      scenes[s].labels.push_back(samples[i].g);
    }
  });
  return scenes;
}

EvalReport evaluate_checkpoint(const Checkpoint& ck, const Dataset& ds, Split split, const std::vector<int>& ks,
                               const std::string& config_name) {
  if (ks.empty()) throw InvalidArgument("evaluate_checkpoint: no K values");
  if (ck.baseline.num_classes() != static_cast<std::size_t>(ds.spec.num_classes)) {
    throw InvalidArgument("evaluate_checkpoint: checkpoint and dataset disagree on the class count");
  }
  std::function<Vec(const RelationSample&)> score;
  if (ck.predictor) {
    const PredictorParams& p = *ck.predictor;
    const RoutingMode mode = ck.config.routing;
    score = [&p, mode](const RelationSample& s) { return route_and_score(s, p, mode).scores; };
  } else {
    score = [&ck](const RelationSample& s) { return baseline_forward(s, ck.baseline); };
  }
  const auto scenes = score_scenes(ds.split(split), score);
  EvalReport rep;
  rep.config_name = config_name;
  rep.seed = ck.config.seed;
  rep.train_frequency = ds.counts(Split::kTrain);
  rep.config_json = train_config_to_json(ck.config);
  const FrequencyGroups groups = frequency_groups(rep.train_frequency);
  for (int k : ks) {
    KReport kr;
    kr.k = k;
    kr.result = recall_at_k(scenes, ds.spec.num_classes, k);
    kr.mean_recall = kr.result.mean_recall();
    kr.groups = group_report(kr.result, groups);
    rep.per_k.push_back(std::move(kr));
  }
  return rep;
}

std::string report_csv_header(int num_classes) {
  std::string h = "config_name,seed,K,mR,top_mean,middle_mean,bottom_mean";
  for (int c = 0; c < num_classes; ++c) h += ",recall_" + std::to_string(c);
  return h + "\n";
}

std::string report_csv_rows(const EvalReport& r) {
  std::ostringstream out;
  for (const auto& kr : r.per_k) {
    out << r.config_name << ',' << r.seed << ',' << kr.k << ',' << format_double(kr.mean_recall) << ','
        << format_double(kr.groups.top) << ',' << format_double(kr.groups.middle) << ','
        << format_double(kr.groups.bottom);
    for (double v : kr.result.recall) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

std::string report_csv(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw InvalidArgument("report_csv: no reports");
  const auto A = static_cast<int>(reports.front().train_frequency.size());
  std::string out = report_csv_header(A);
  for (const auto& r : reports) {
    if (static_cast<int>(r.train_frequency.size()) != A) throw InvalidArgument("report_csv: mixed class counts");
    out += report_csv_rows(r);
  }
  return out;
}

}  // namespace predbranch

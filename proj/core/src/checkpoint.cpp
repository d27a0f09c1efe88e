// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include <string>

#include "json_io.hpp"
#include "predbranch/errors.hpp"
#include "predbranch/textio.hpp"
#include "predbranch/trainer.hpp"

namespace predbranch {
namespace {

using detail::Json;

const char* kind_name(HeadKind k) {
  switch (k) {
    case HeadKind::kRoot:
      return "root";
    case HeadKind::kGroup:
      return "group";
    case HeadKind::kAllClass:
      return "all";
  }
  return "?";
}

HeadKind kind_from(const std::string& s, const std::string& block) {
  if (s == "root") return HeadKind::kRoot;
  if (s == "group") return HeadKind::kGroup;
  if (s == "all") return HeadKind::kAllClass;
  throw FormatError(block + ": unknown head kind \"" + s + "\"");
}

/// Reads a matrix block and insists on the shape the model expects.
Mat shaped(const Json& obj, const char* key, const std::string& block, std::size_t rows, std::size_t cols) {
  const std::string name = block + "." + key;
  Mat m = detail::mat_from_json(detail::member(obj, key, block), name);
  if (m.rows() != rows || m.cols() != cols) {
    throw FormatError(name + ": expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix, found " +
                      std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  return m;
}

Json head_to_json(const ClassifierHead& h) {
  Json j = Json::object();
  j["name"] = h.name;
  j["kind"] = kind_name(h.kind);
  j["group"] = h.group;
  j["W_e"] = detail::mat_to_json(h.W_e);
  j["W_u"] = detail::mat_to_json(h.W_u);
  j["W_z"] = detail::mat_to_json(h.W_z);
  j["coef_e"] = detail::mat_to_json(h.coef_e.W);
  j["coef_u"] = detail::mat_to_json(h.coef_u.W);
  return j;
}

ClassifierHead head_from_json(const Json& j, const std::string& block, const GroupPartition& partition,
                              std::size_t P, bool kt) {
  const HeadKind kind = kind_from(detail::string_member(j, "kind", block), block);
  const auto group = static_cast<int>(detail::int_member(j, "group", block));
  ClassifierHead h;
  try {
    h = make_head(kind, partition, group, static_cast<int>(P), kt);
  } catch (const InvalidArgument& e) {
    throw FormatError(block + ": " + e.what());
  }
  if (detail::string_member(j, "name", block) != h.name) throw FormatError(block + ": head name mismatch");
  h.W_e = shaped(j, "W_e", block, h.W_e.rows(), h.W_e.cols());
  h.W_u = shaped(j, "W_u", block, h.W_u.rows(), h.W_u.cols());
  h.W_z = shaped(j, "W_z", block, h.W_z.rows(), h.W_z.cols());
  h.coef_e.W = shaped(j, "coef_e", block, h.coef_e.W.rows(), h.coef_e.W.cols());
  h.coef_u.W = shaped(j, "coef_u", block, h.coef_u.W.rows(), h.coef_u.W.cols());
  return h;
}

Json stats_to_json(const ClassStats& st) {
  Json j = Json::object();
  j["avg_prob"] = detail::mat_to_json(st.avg_prob);
  j["avg_e"] = detail::mat_to_json(st.avg_e);
  j["avg_u"] = detail::mat_to_json(st.avg_u);
  j["support"] = st.support;
  j["warnings"] = st.warnings;
  return j;
}

ClassStats stats_from_json(const Json& j, std::size_t A, std::size_t P) {
  const std::string block = "stats";
  ClassStats st;
  st.avg_prob = shaped(j, "avg_prob", block, A, A);
  st.avg_e = shaped(j, "avg_e", block, A, P);
  st.avg_u = shaped(j, "avg_u", block, A, P);
  st.support = detail::ints_from_json(detail::member(j, "support", block), "stats.support");
  if (st.support.size() != A) throw FormatError("stats.support: expected " + std::to_string(A) + " entries");
  const Json& w = detail::member(j, "warnings", block);
  if (!w.is_array()) throw FormatError("stats.warnings: expected an array");
  for (const auto& item : w) {
    if (!item.is_string()) throw FormatError("stats.warnings: expected strings");
    st.warnings.push_back(item.get<std::string>());
  }
  return st;
}

Json predictor_to_json(const PredictorParams& p) {
  Json j = Json::object();
  j["branched"] = p.branched;
  j["knowledge_transfer"] = p.knowledge_transfer;
  j["kt"] = {{"alpha", p.kt.alpha}, {"gamma", p.kt.gamma}, {"margin", p.kt.margin}, {"lambda_mem", p.kt.lambda_mem}};
  Json heads = Json::array();
  if (p.root) heads.push_back(head_to_json(*p.root));
  for (const auto& h : p.heads) heads.push_back(head_to_json(h));
  j["heads"] = std::move(heads);
  j["memory_e"] = detail::mat_to_json(p.memory_e.V);
  j["memory_u"] = detail::mat_to_json(p.memory_u.V);
  j["memory_trainable"] = p.memory_e.trainable;
  return j;
}

PredictorParams predictor_from_json(const Json& j, const std::optional<GroupPartition>& partition, std::size_t A,
                                    std::size_t P) {
  const std::string block = "params.predictor";
  PredictorParams p;
  p.branched = detail::bool_member(j, "branched", block);
  p.knowledge_transfer = detail::bool_member(j, "knowledge_transfer", block);
  const Json& kt = detail::member(j, "kt", block);
  p.kt.alpha = detail::number_member(kt, "alpha", block + ".kt");
  p.kt.gamma = detail::number_member(kt, "gamma", block + ".kt");
  p.kt.margin = detail::number_member(kt, "margin", block + ".kt");
  p.kt.lambda_mem = detail::number_member(kt, "lambda_mem", block + ".kt");
  if (p.branched) {
    if (!partition) throw FormatError(block + ": branched predictor without a partition");
    p.partition = *partition;
  } else {
    p.partition = GroupPartition::trivial(static_cast<int>(A));
  }
  if (p.partition.num_classes() != A) throw FormatError("partition: class count disagrees with the parameters");
  const Json& heads = detail::member(j, "heads", block);
  if (!heads.is_array()) throw FormatError(block + ".heads: expected an array");
  const std::size_t expected = p.branched ? p.partition.num_groups() + 1 : 1;
  if (heads.size() != expected) {
    throw FormatError(block + ".heads: expected " + std::to_string(expected) + " heads, found " +
                      std::to_string(heads.size()));
  }
  for (std::size_t i = 0; i < heads.size(); ++i) {
    const std::string hb = block + ".heads[" + std::to_string(i) + "]";
    ClassifierHead h = head_from_json(heads[i], hb, p.partition, P, p.knowledge_transfer);
    const HeadKind want = !p.branched ? HeadKind::kAllClass : (i == 0 ? HeadKind::kRoot : HeadKind::kGroup);
    if (h.kind != want || (want == HeadKind::kGroup && h.group != static_cast<int>(i - 1))) {
      throw FormatError(hb + ": unexpected head kind or order");
    }
    if (want == HeadKind::kRoot) {
      p.root = std::move(h);
    } else {
      p.heads.push_back(std::move(h));
    }
  }
  p.memory_e.V = shaped(j, "memory_e", block, A, P);
  p.memory_u.V = shaped(j, "memory_u", block, A, P);
  p.memory_e.trainable = p.memory_u.trainable = detail::bool_member(j, "memory_trainable", block);
  return p;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  Json j = Json::object();
  j["version"] = Checkpoint::kVersion;
  j["config"] = detail::parse(train_config_to_json(ck.config), "config");
  j["partition"] = ck.partition ? detail::parse(partition_to_json(*ck.partition), "partition") : Json();
  Json params = Json::object();
  params["baseline"] = {{"W_e", detail::mat_to_json(ck.baseline.W_e)}, {"W_u", detail::mat_to_json(ck.baseline.W_u)}};
  params["predictor"] = ck.predictor ? predictor_to_json(*ck.predictor) : Json();
  j["params"] = std::move(params);
  j["stats"] = ck.stats ? stats_to_json(*ck.stats) : Json();
  j["iteration"] = ck.iteration;
  Json metrics = Json::object();
  for (const auto& [k, v] : ck.metrics) metrics[k] = v;
  j["metrics"] = std::move(metrics);
  return detail::dump(j) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  const Json j = detail::parse(text, "checkpoint");
  if (!j.is_object()) throw FormatError("checkpoint: expected an object");
  const std::string version = detail::string_member(j, "version", "checkpoint");
  if (version != Checkpoint::kVersion) {
    throw FormatError("checkpoint: unsupported version \"" + version + "\" (expected \"" + Checkpoint::kVersion +
                      "\")");
  }
  Checkpoint ck;
  try {
    ck.config = train_config_from_json(detail::dump(detail::member(j, "config", "checkpoint")));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  const Json& part = detail::member(j, "partition", "checkpoint");
  if (!part.is_null()) ck.partition = partition_from_json(detail::dump(part));

  const Json& params = detail::member(j, "params", "checkpoint");
  const Json& base = detail::member(params, "baseline", "params");
  ck.baseline.W_e = detail::mat_from_json(detail::member(base, "W_e", "params.baseline"), "params.baseline.W_e");
  const std::size_t A = ck.baseline.W_e.rows();
  const std::size_t P = ck.baseline.W_e.cols();
  ck.baseline.W_u = shaped(base, "W_u", "params.baseline", A, P);

  const Json& stats = detail::member(j, "stats", "checkpoint");
  if (!stats.is_null()) ck.stats = stats_from_json(stats, A, P);
  const Json& pred = detail::member(params, "predictor", "params");
  if (!pred.is_null()) ck.predictor = predictor_from_json(pred, ck.partition, A, P);

  ck.iteration = static_cast<int>(detail::int_member(j, "iteration", "checkpoint"));
  const Json& metrics = detail::member(j, "metrics", "checkpoint");
  if (!metrics.is_object()) throw FormatError("metrics: expected an object");
  for (const auto& [k, v] : metrics.items()) ck.metrics[k] = detail::number_member(metrics, k.c_str(), "metrics");
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_text_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_text_file(path)); }

}  // namespace predbranch

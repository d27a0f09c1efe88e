// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "predbranch/config.hpp"

#include <cmath>

#include "json_io.hpp"
#include "predbranch/errors.hpp"

namespace predbranch {
namespace {

using detail::Json;

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::pair<std::string_view, Enum> (&table)[N], const char* what) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  throw InvalidArgument(std::string("unknown ") + what + " \"" + std::string(s) + "\"");
}

constexpr std::pair<std::string_view, RoutingMode> kRouting[] = {{"hard", RoutingMode::kHard},
                                                                 {"soft", RoutingMode::kSoft}};
constexpr std::pair<std::string_view, Linkage> kLinkage[] = {
    {"average", Linkage::kAverage}, {"single", Linkage::kSingle}, {"complete", Linkage::kComplete}};
constexpr std::pair<std::string_view, Metric> kMetric[] = {{"euclidean", Metric::kEuclidean},
                                                           {"sqeuclidean", Metric::kSquaredEuclidean},
                                                           {"cityblock", Metric::kCityBlock}};
constexpr std::pair<std::string_view, OffBranchLoss> kOffBranch[] = {{"masked", OffBranchLoss::kMasked},
                                                                     {"uniform", OffBranchLoss::kUniformTarget}};

template <typename Enum, std::size_t N>
std::string_view enum_name(Enum v, const std::pair<std::string_view, Enum> (&table)[N]) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "?";
}

[[noreturn]] void invalid(const std::string& msg) { throw InvalidArgument("TrainConfig: " + msg); }

TrainConfig apply_fields(TrainConfig cfg, const Json& j) {
  const std::string block = "train config";
  if (!j.is_object()) throw FormatError(block + ": expected an object");
  auto get_int = [&](const Json& o, const char* key, int& out, const std::string& b) {
    if (o.contains(key)) out = static_cast<int>(detail::int_member(o, key, b));
  };
  auto get_num = [&](const Json& o, const char* key, double& out, const std::string& b) {
    if (o.contains(key)) out = detail::number_member(o, key, b);
  };
  auto get_bool = [&](const char* key, bool& out) {
    if (j.contains(key)) out = detail::bool_member(j, key, block);
  };
  get_int(j, "batch_size", cfg.batch_size, block);
  get_num(j, "base_lr", cfg.base_lr, block);
  get_int(j, "warmup_iters", cfg.warmup_iters, block);
  get_int(j, "total_iters", cfg.total_iters, block);
  get_int(j, "pretrain_iters", cfg.pretrain_iters, block);
  get_num(j, "momentum", cfg.momentum, block);
  get_int(j, "lr_decay_every", cfg.lr_decay_every, block);
  get_num(j, "lr_decay_factor", cfg.lr_decay_factor, block);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw FormatError(block + ": field 'seed' must be a non-negative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("kt")) {
    const Json& kt = j.at("kt");
    const std::string kb = block + ".kt";
    get_num(kt, "alpha", cfg.kt.alpha, kb);
    get_num(kt, "gamma", cfg.kt.gamma, kb);
    get_num(kt, "margin", cfg.kt.margin, kb);
    get_num(kt, "lambda_mem", cfg.kt.lambda_mem, kb);
  }
  get_bool("branch", cfg.branch);
  get_bool("knowledge_transfer", cfg.knowledge_transfer);
  get_int(j, "num_groups", cfg.num_groups, block);
  if (j.contains("linkage")) cfg.linkage = linkage_from_string(detail::string_member(j, "linkage", block));
  if (j.contains("metric")) cfg.metric = metric_from_string(detail::string_member(j, "metric", block));
  get_bool("memory_grad_from_relation", cfg.memory_grad_from_relation);
  if (j.contains("off_branch")) cfg.off_branch = off_branch_from_string(detail::string_member(j, "off_branch", block));
  get_bool("coef_ce_both_streams", cfg.coef_ce_both_streams);
  get_bool("mem_loss_per_classifier", cfg.mem_loss_per_classifier);
  if (j.contains("routing")) cfg.routing = routing_from_string(detail::string_member(j, "routing", block));
  if (j.contains("ks")) cfg.ks = detail::ints_from_json(j.at("ks"), block + ".ks");
  return cfg;
}

}  // namespace

void KTConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("KTConfig: alpha must be > 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("KTConfig: gamma must be >= 0");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw InvalidArgument("KTConfig: margin must be >= 0");
  if (!(lambda_mem >= 0.0) || !std::isfinite(lambda_mem)) throw InvalidArgument("KTConfig: lambda_mem must be >= 0");
}

void TrainConfig::validate() const {
  if (batch_size < 1) invalid("batch_size must be >= 1");
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) invalid("base_lr must be > 0");
  if (warmup_iters < 0) invalid("warmup_iters must be >= 0");
  if (total_iters < 0) invalid("total_iters must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) invalid("momentum must lie in [0, 1)");
  if (lr_decay_every < 0) invalid("lr_decay_every must be >= 0");
  if (!(lr_decay_factor > 0.0)) invalid("lr_decay_factor must be > 0");
  if (num_groups < 1) invalid("num_groups must be >= 1");
  if (ks.empty()) invalid("ks must not be empty");
  for (int k : ks) {
    if (k < 1) invalid("every K must be >= 1");
  }
  kt.validate();
}

std::string_view to_string(RoutingMode m) { return enum_name(m, kRouting); }
std::string_view to_string(Linkage l) { return enum_name(l, kLinkage); }
std::string_view to_string(Metric m) { return enum_name(m, kMetric); }
std::string_view to_string(OffBranchLoss o) { return enum_name(o, kOffBranch); }
RoutingMode routing_from_string(std::string_view s) { return parse_enum(s, kRouting, "routing mode"); }
Linkage linkage_from_string(std::string_view s) { return parse_enum(s, kLinkage, "linkage"); }
Metric metric_from_string(std::string_view s) { return parse_enum(s, kMetric, "metric"); }
OffBranchLoss off_branch_from_string(std::string_view s) { return parse_enum(s, kOffBranch, "off-branch loss"); }

std::string train_config_to_json(const TrainConfig& cfg) {
  Json j = Json::object();
  j["batch_size"] = cfg.batch_size;
  j["base_lr"] = cfg.base_lr;
  j["warmup_iters"] = cfg.warmup_iters;
  j["total_iters"] = cfg.total_iters;
  j["pretrain_iters"] = cfg.pretrain_iters;
  j["momentum"] = cfg.momentum;
  j["lr_decay_every"] = cfg.lr_decay_every;
  j["lr_decay_factor"] = cfg.lr_decay_factor;
  j["seed"] = cfg.seed;
  j["kt"] = {{"alpha", cfg.kt.alpha},
             {"gamma", cfg.kt.gamma},
             {"margin", cfg.kt.margin},
             {"lambda_mem", cfg.kt.lambda_mem}};
  j["branch"] = cfg.branch;
  j["knowledge_transfer"] = cfg.knowledge_transfer;
  j["num_groups"] = cfg.num_groups;
  j["linkage"] = std::string(to_string(cfg.linkage));
  j["metric"] = std::string(to_string(cfg.metric));
  j["memory_grad_from_relation"] = cfg.memory_grad_from_relation;
  j["off_branch"] = std::string(to_string(cfg.off_branch));
  j["coef_ce_both_streams"] = cfg.coef_ce_both_streams;
  j["mem_loss_per_classifier"] = cfg.mem_loss_per_classifier;
  j["routing"] = std::string(to_string(cfg.routing));
  j["ks"] = cfg.ks;
  return detail::dump(j);
}

TrainConfig train_config_from_json(const std::string& text) { return merge_train_config(TrainConfig{}, text); }

TrainConfig merge_train_config(const TrainConfig& base, const std::string& text) {
  TrainConfig cfg = apply_fields(base, detail::parse(text, "train config"));
  cfg.validate();
  return cfg;
}

}  // namespace predbranch

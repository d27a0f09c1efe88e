// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "predbranch/clustering.hpp"
#include "predbranch/config.hpp"
#include "predbranch/errors.hpp"
#include "predbranch/evalreport.hpp"
#include "predbranch/gradsuite.hpp"
#include "predbranch/random.hpp"
#include "predbranch/synthdata.hpp"
#include "predbranch/textio.hpp"
#include "predbranch/tolerances.hpp"
#include "predbranch/trainer.hpp"

namespace predbranch::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Flags shared by every command that trains or evaluates.
struct TrainFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> groups, batch, iters;
  std::optional<double> lambda, alpha, gamma, margin;
  std::optional<std::string> routing, ks;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "TrainConfig JSON; flags override it")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "master seed");
    app->add_option("--groups", groups, "number of label groups")->check(CLI::PositiveNumber);
    app->add_option("--batch", batch, "mini-batch size")->check(CLI::PositiveNumber);
    app->add_option("--iters", iters, "training iterations")->check(CLI::NonNegativeNumber);
    app->add_option("--lambda", lambda, "memory-loss balance");
    app->add_option("--alpha", alpha, "feature scale of the enhancement");
    app->add_option("--gamma", gamma, "weight of the memory push term");
    app->add_option("--margin", margin, "memory push margin");
    app->add_option("--routing", routing, "hard|soft")->check(CLI::IsMember({"hard", "soft"}));
    app->add_option("--k", ks, "comma-separated K list for recall@K");
  }

  TrainConfig resolve() const {
    TrainConfig cfg;
    if (!config_path.empty()) cfg = train_config_from_json(read_text_file(config_path));
    if (seed) cfg.seed = *seed;
    if (groups) cfg.num_groups = *groups;
    if (batch) cfg.batch_size = *batch;
    if (iters) cfg.total_iters = *iters;
    if (lambda) cfg.kt.lambda_mem = *lambda;
    if (alpha) cfg.kt.alpha = *alpha;
    if (gamma) cfg.kt.gamma = *gamma;
    if (margin) cfg.kt.margin = *margin;
    if (routing) cfg.routing = routing_from_string(*routing);
    if (ks) cfg.ks = parse_ks(*ks);
    cfg.validate();
    return cfg;
  }

  static std::vector<int> parse_ks(const std::string& text) {
    std::vector<int> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      try {
        std::size_t used = 0;
        const int k = std::stoi(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
        out.push_back(k);
      } catch (const std::exception&) {
        throw CLI::ValidationError("--k", "not an integer: '" + item + "'");
      }
    }
    if (out.empty()) throw CLI::ValidationError("--k", "empty list");
    return out;
  }
};

Json parsed(const std::string& text) { return Json::parse(text); }

/// Explicit manifest path, else one next to the output, else a per-command default.
fs::path manifest_path(const std::string& chosen, const std::string& out, const std::string& command) {
  if (!chosen.empty()) return fs::path(chosen);
  if (!out.empty()) return fs::path(out + ".manifest.json");
  return fs::path("predbranch-" + command + ".manifest.json");
}

void write_manifest(const std::string& command, const std::vector<std::string>& args, const Json& config,
                    const Json& inputs, const Json& outputs, std::uint64_t seed, const fs::path& path) {
  Json m = Json::object();
  m["command"] = command;
  m["tool_version"] = PREDBRANCH_VERSION;
  m["argv"] = args;
  m["seed"] = seed;
  m["config"] = config;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  write_text_file(path, m.dump(2) + "\n");
}

/// Refuses to overwrite any input with an output.
void check_distinct(const std::vector<std::string>& inputs, const std::string& out) {
  if (out.empty()) return;
  for (const auto& in : inputs) {
    if (in.empty()) continue;
    std::error_code ec;
    if (in == out || fs::equivalent(in, out, ec)) throw InvalidArgument("output would overwrite input " + in);
  }
}

void print_report(std::ostream& out, const EvalReport& r) {
  for (const auto& kr : r.per_k) {
    out << r.config_name << " seed=" << r.seed << " K=" << kr.k << " mR=" << format_double(kr.mean_recall)
        << " top=" << format_double(kr.groups.top) << " middle=" << format_double(kr.groups.middle)
        << " bottom=" << format_double(kr.groups.bottom) << "\n";
  }
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Branched relation predictor with class-memory knowledge transfer", "predbranch"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PREDBRANCH_VERSION);
  std::string manifest_override;
  app.add_option("--manifest", manifest_override, "where to write the run manifest");

  std::function<void()> run;

  // gen-data
  std::string spec_path, data_path, out_path, ckpt_path, partition_path, log_path, name = "eval";
  std::optional<std::uint64_t> data_seed;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--spec", spec_path, "DatasetSpec JSON")->check(CLI::ExistingFile);
  gen->add_option("--seed", data_seed, "overrides the seed in --spec");
  gen->add_option("--out", out_path, "dataset file")->required();
  gen->callback([&] {
    run = [&] {
      DatasetSpec spec;
      if (!spec_path.empty()) spec = dataset_spec_from_json(read_text_file(spec_path));
      if (data_seed) spec.seed = *data_seed;
      spec.validate();
      check_distinct({spec_path}, out_path);
      write_manifest("gen-data", args, parsed(dataset_spec_to_json(spec)), {{"spec", spec_path}}, {{"data", out_path}},
                     spec.seed, manifest_path(manifest_override, out_path, "gen-data"));
      const Dataset ds = generate_dataset(spec);
      write_dataset(ds, out_path);
      out << "wrote " << out_path << ": train=" << ds.train().size() << " test=" << ds.test().size() << "\n";
    };
  });

  TrainFlags pre_flags, cl_flags, tr_flags, ev_flags, ab_flags;

  auto* pre = app.add_subcommand("pretrain", "pretrain the all-class baseline and record class statistics");
  pre->add_option("--data", data_path, "dataset file")->required()->check(CLI::ExistingFile);
  pre->add_option("--out", out_path, "baseline checkpoint")->required();
  pre_flags.add_to(pre);
  pre->callback([&] {
    run = [&] {
      TrainConfig cfg = pre_flags.resolve();
      check_distinct({data_path, pre_flags.config_path}, out_path);
      write_manifest("pretrain", args, parsed(train_config_to_json(cfg)), {{"data", data_path}},
                     {{"checkpoint", out_path}}, cfg.seed,
                     manifest_path(manifest_override, out_path, "pretrain"));
      const Dataset ds = read_dataset(data_path);
      const Checkpoint ck = pretrain_checkpoint(ds, cfg);
      save_checkpoint(ck, out_path);
      for (const auto& w : ck.stats->warnings) err << "warning: " << w << "\n";
      out << "wrote " << out_path << ": train accuracy " << format_double(ck.metrics.at("baseline_train_accuracy"))
          << "\n";
    };
  });

  auto* cl = app.add_subcommand("cluster", "group labels by agglomerative clustering of baseline predictions");
  cl->add_option("--ckpt", ckpt_path, "pretrained checkpoint")->check(CLI::ExistingFile);
  cl->add_option("--data", data_path, "dataset file (pretrains when no checkpoint is given)")
      ->check(CLI::ExistingFile);
  cl->add_option("--out", out_path, "partition JSON")->required();
  cl_flags.add_to(cl);
  cl->callback([&] {
    run = [&] {
      if (ckpt_path.empty() && data_path.empty()) throw CLI::RequiredError("--ckpt or --data");
      TrainConfig cfg = cl_flags.resolve();
      check_distinct({ckpt_path, data_path, cl_flags.config_path}, out_path);
      write_manifest("cluster", args, parsed(train_config_to_json(cfg)), {{"checkpoint", ckpt_path}, {"data", data_path}},
                     {{"partition", out_path}}, cfg.seed,
                     manifest_path(manifest_override, out_path, "cluster"));
      std::optional<ClassStats> stats;
      if (!ckpt_path.empty()) {
        Checkpoint ck = load_checkpoint(ckpt_path);
        if (ck.stats) {
          stats = std::move(ck.stats);
        } else if (!data_path.empty()) {
          stats = class_statistics(read_dataset(data_path), ck.baseline);
        } else {
          throw InvalidArgument("checkpoint has no class statistics; pass --data");
        }
      } else {
        stats = pretrain_checkpoint(read_dataset(data_path), cfg).stats;
      }
      const GroupPartition p = cluster_predicates(*stats, cfg.num_groups, cfg.linkage, cfg.metric);
      write_text_file(out_path, partition_to_json(p) + "\n");
      for (std::size_t b = 0; b < p.num_groups(); ++b) {
        out << "group " << b << ":";
        for (int c : p.group(b)) out << " " << c;
        out << "\n";
      }
    };
  });

  auto* tr = app.add_subcommand("train", "train the branched predictor");
  tr->add_option("--data", data_path, "dataset file")->required()->check(CLI::ExistingFile);
  tr->add_option("--ckpt", ckpt_path, "pretrained checkpoint (pretrains when absent)")->check(CLI::ExistingFile);
  tr->add_option("--partition", partition_path, "partition JSON (clusters when absent)")->check(CLI::ExistingFile);
  tr->add_option("--out", out_path, "predictor checkpoint")->required();
  tr->add_option("--log", log_path, "per-iteration loss CSV");
  tr_flags.add_to(tr);
  tr->callback([&] {
    run = [&] {
      TrainConfig cfg = tr_flags.resolve();
      check_distinct({data_path, ckpt_path, partition_path, tr_flags.config_path}, out_path);
      check_distinct({data_path, ckpt_path, partition_path, tr_flags.config_path}, log_path);
      write_manifest("train", args, parsed(train_config_to_json(cfg)),
                     {{"data", data_path}, {"checkpoint", ckpt_path}, {"partition", partition_path}},
                     {{"checkpoint", out_path}, {"log", log_path}}, cfg.seed,
                     manifest_path(manifest_override, out_path, "train"));
      const Dataset ds = read_dataset(data_path);
      Checkpoint pretrained = ckpt_path.empty() ? pretrain_checkpoint(ds, cfg) : load_checkpoint(ckpt_path);
      if (!partition_path.empty()) pretrained.partition = partition_from_json(read_text_file(partition_path));
      LossLog log;
      const Checkpoint ck = train_from_pretrained(ds, pretrained, cfg, &log);
      save_checkpoint(ck, out_path);
      if (!log_path.empty()) write_text_file(log_path, log.to_csv());
      out << "wrote " << out_path << ": " << ck.iteration << " iterations";
      if (ck.metrics.count("final_loss") != 0) out << ", final loss " << format_double(ck.metrics.at("final_loss"));
      out << "\n";
    };
  });

  auto* ev = app.add_subcommand("eval", "recall@K report of a checkpoint on the test split");
  ev->add_option("--data", data_path, "dataset file")->required()->check(CLI::ExistingFile);
  ev->add_option("--ckpt", ckpt_path, "checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", out_path, "report CSV")->required();
  ev->add_option("--name", name, "config_name column");
  ev_flags.add_to(ev);
  ev->callback([&] {
    run = [&] {
      check_distinct({data_path, ckpt_path}, out_path);
      Checkpoint ck = load_checkpoint(ckpt_path);
      if (ev_flags.routing) ck.config.routing = routing_from_string(*ev_flags.routing);
      if (ev_flags.ks) ck.config.ks = TrainFlags::parse_ks(*ev_flags.ks);
      write_manifest("eval", args, parsed(train_config_to_json(ck.config)),
                     {{"data", data_path}, {"checkpoint", ckpt_path}}, {{"report", out_path}}, ck.config.seed,
                     manifest_path(manifest_override, out_path, "eval"));
      const Dataset ds = read_dataset(data_path);
      const EvalReport r = evaluate_checkpoint(ck, ds, Split::kTest, ck.config.ks, name);
      write_text_file(out_path, report_csv({r}));
      print_report(out, r);
    };
  });

  int n_seeds = 5;
  auto* ab = app.add_subcommand("ablate", "branch x knowledge-transfer ablation grid");
  ab->add_option("--data", data_path, "dataset file")->required()->check(CLI::ExistingFile);
  ab->add_option("--seeds", n_seeds, "number of seeds")->check(CLI::PositiveNumber);
  ab->add_option("--out", out_path, "merged report CSV")->required();
  ab_flags.add_to(ab);
  ab->callback([&] {
    run = [&] {
      TrainConfig cfg = ab_flags.resolve();
      check_distinct({data_path, ab_flags.config_path}, out_path);
      std::vector<std::uint64_t> seeds;
      for (int i = 0; i < n_seeds; ++i) seeds.push_back(derive_seed(cfg.seed, "ablation/" + std::to_string(i)));
      Json config = parsed(train_config_to_json(cfg));
      config["ablation_seeds"] = seeds;
      write_manifest("ablate", args, config, {{"data", data_path}}, {{"report", out_path}}, cfg.seed,
                     manifest_path(manifest_override, out_path, "ablate"));
      const Dataset ds = read_dataset(data_path);
      const auto reports = ablation_run(ds, cfg, seeds);
      write_text_file(out_path, report_csv(reports));
      for (const auto& r : reports) print_report(out, r);
    };
  });

  std::uint64_t gc_seed = 0;
  bool gc_failed = false;
  auto* gc = app.add_subcommand("grad-check", "finite-difference check of every analytic gradient");
  gc->add_option("--seed", gc_seed, "instance seed");
  gc->callback([&] {
    run = [&] {
      write_manifest("grad-check", args, Json::object(), Json::object(), Json::object(), gc_seed,
                     manifest_path(manifest_override, "", "grad-check"));
      double worst = 0.0;
      for (const auto& c : run_grad_suite(gc_seed)) {
        out << c.name << ": max relative error " << format_double(c.result.max_rel_error) << " over "
            << c.result.coordinates << " coordinates (worst " << c.result.worst_param << "[" << c.result.worst_index
            << "])\n";
        worst = std::max(worst, c.result.max_rel_error);
      }
      out << "max relative error " << format_double(worst) << "\n";
      if (!(worst <= tol::kGradCheckMaxRelError)) {
        err << "invariant violated: analytic gradients disagree with finite differences (" << format_double(worst)
            << " > " << format_double(tol::kGradCheckMaxRelError) << ")\n";
        gc_failed = true;
      }
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << PREDBRANCH_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    run();
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "invariant violated: " << e.what() << "\n";
    return kExitInvariant;
  }
  return gc_failed ? kExitInvariant : kExitOk;
}

}  // namespace predbranch::cli

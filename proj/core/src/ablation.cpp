// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "predbranch/evalreport.hpp"
#include "predbranch/trainer.hpp"

namespace predbranch {

std::vector<std::pair<std::string, TrainConfig>> ablation_configs(const TrainConfig& base) {
  auto make = [&](bool branch, bool kt) {
    TrainConfig cfg = base;
    cfg.branch = branch;
    cfg.knowledge_transfer = kt;
    if (!kt) cfg.kt.lambda_mem = 0.0;
    return cfg;
  };
  return {{"baseline", make(false, false)},
          {"branch", make(true, false)},
          {"kt", make(false, true)},
          {"branch_kt", make(true, true)}};
}

std::vector<EvalReport> ablation_run(const Dataset& ds, const TrainConfig& base,
                                     const std::vector<std::uint64_t>& seeds) {
  std::vector<EvalReport> out;
  for (std::uint64_t seed : seeds) {
    TrainConfig seeded = base;
    seeded.seed = seed;
    const Checkpoint pretrained = pretrain_checkpoint(ds, seeded);
    for (const auto& [name, cfg] : ablation_configs(seeded)) {
      const Checkpoint ck = train_from_pretrained(ds, pretrained, cfg);
      out.push_back(evaluate_checkpoint(ck, ds, Split::kTest, cfg.ks, name));
    }
  }
  return out;
}

}  // namespace predbranch

// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "predbranch/synthdata.hpp"
#include "predbranch/textio.hpp"
#include "test_util.hpp"

namespace predbranch {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code;
  std::string out, err;
};

RunResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

/// Writes a small dataset spec and generates its data file.
fs::path small_data(const fs::path& dir) {
  write_text_file(dir / "spec.json", dataset_spec_to_json(testutil::small_spec(6)));
  const auto r = run({"gen-data", "--spec", (dir / "spec.json").string(), "--out", (dir / "data.txt").string()});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  return dir / "data.txt";
}

TEST(Cli, GenDataIsDeterministic) {
  const auto dir = testutil::scratch_dir();
  for (const char* name : {"a.txt", "b.txt"}) {
    const auto r = run({"gen-data", "--seed", "5", "--out", (dir / name).string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  }
  EXPECT_EQ(read_text_file(dir / "a.txt"), read_text_file(dir / "b.txt"));
  const auto manifest = nlohmann::json::parse(read_text_file(dir / "a.txt.manifest.json"));
  EXPECT_EQ(manifest.at("command"), "gen-data");
  EXPECT_EQ(manifest.at("seed"), 5u);
  EXPECT_TRUE(manifest.contains("tool_version"));
  EXPECT_EQ(manifest.at("config").at("seed"), 5u);
}

TEST(Cli, GradCheckPasses) {
  const auto dir = testutil::scratch_dir();
  const auto r = run({"--manifest", (dir / "m.json").string(), "grad-check", "--seed", "7"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("max relative error"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "m.json"));
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({"gen-data", "--bogus", "1"}).code, cli::kExitUsage);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"nonsense"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"gen-data"}).code, cli::kExitUsage);  // --out is required
  EXPECT_EQ(run({"train", "--data", "/nonexistent/file", "--out", "x"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

TEST(Cli, InvariantViolationExitsOne) {
  const auto dir = testutil::scratch_dir();
  const fs::path data = small_data(dir);
  // Output path equal to the input.
  auto r = run({"pretrain", "--data", data.string(), "--out", data.string()});
  EXPECT_EQ(r.code, cli::kExitInvariant);
  EXPECT_NE(r.err.find("invariant violated"), std::string::npos);
  // A corrupted dataset file.
  write_text_file(dir / "bad.txt", "not a dataset\n");
  r = run({"pretrain", "--data", (dir / "bad.txt").string(), "--out", (dir / "ck.json").string()});
  EXPECT_EQ(r.code, cli::kExitInvariant);
  // More groups than classes.
  r = run({"cluster", "--data", data.string(), "--groups", "9", "--iters", "20", "--out",
           (dir / "p.json").string()});
  EXPECT_EQ(r.code, cli::kExitInvariant);
}

TEST(Cli, FullPipeline) {
  const auto dir = testutil::scratch_dir();
  const fs::path data = small_data(dir);
  const std::string d = data.string();
  const std::string pre = (dir / "pre.json").string(), part = (dir / "part.json").string(),
                    ck = (dir / "ck.json").string(), log = (dir / "log.csv").string(),
                    rep = (dir / "rep.csv").string();
  auto r = run({"pretrain", "--data", d, "--out", pre, "--iters", "100", "--seed", "2"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  r = run({"cluster", "--ckpt", pre, "--out", part});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("group 1:"), std::string::npos);
  r = run({"train", "--data", d, "--ckpt", pre, "--partition", part, "--out", ck, "--log", log, "--iters", "100",
           "--seed", "2"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const std::string csv = read_text_file(log);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 101);
  r = run({"eval", "--data", d, "--ckpt", ck, "--out", rep, "--k", "1,5", "--routing", "soft"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const std::string report = read_text_file(rep);
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 3);
  for (const auto& f : {pre, part, ck, rep}) EXPECT_TRUE(fs::exists(f + ".manifest.json")) << f;
}

TEST(Cli, AblateWritesFourRowsPerSeed) {
  const auto dir = testutil::scratch_dir();
  const fs::path data = small_data(dir);
  const std::string out = (dir / "ablate.csv").string();
  const auto r = run({"ablate", "--data", data.string(), "--seeds", "2", "--iters", "60", "--out", out});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const std::string csv = read_text_file(out);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 * 2);
  const auto manifest = nlohmann::json::parse(read_text_file(out + ".manifest.json"));
  EXPECT_EQ(manifest.at("config").at("ablation_seeds").size(), 2u);
}

TEST(Cli, Version) {
  const auto r = run({"--version"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_FALSE(r.out.empty());
}

}  // namespace
}  // namespace predbranch

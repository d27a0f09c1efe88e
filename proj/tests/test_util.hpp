// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "predbranch/synthdata.hpp"

namespace testutil {

/// Fresh per-test scratch directory under the build tree.
inline std::filesystem::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  std::filesystem::path dir = std::filesystem::current_path() / "scratch" /
                              (std::string(info->test_suite_name()) + "." + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// A small, quick dataset with the default long-tailed shape.
inline predbranch::DatasetSpec small_spec(std::uint64_t seed = 1) {
  predbranch::DatasetSpec s;
  s.num_classes = 6;
  s.feature_dim = 4;
  s.n_train = 600;
  s.n_val = 30;
  s.n_test = 200;
  s.imbalance_exponent = 1.0;
  s.seed = seed;
  return s;
}

}  // namespace testutil

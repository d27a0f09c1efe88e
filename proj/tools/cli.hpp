// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0
//
// predbranch command-line interface. Exit codes: 0 success, 1 a violated
// invariant or failed check, 2 a usage error.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace predbranch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvariant = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace predbranch::cli

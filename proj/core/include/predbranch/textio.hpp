// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace predbranch {

/// Shortest locale-independent rendering at 17 significant digits
/// (round-trips every binary64 exactly).
std::string format_double(double value);

/// Whole-file read; throws IoError.
std::string read_text_file(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames; throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace predbranch

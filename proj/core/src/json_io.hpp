// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON helpers shared by the file formats. Private to the library.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "predbranch/numerics.hpp"

namespace predbranch::detail {

using Json = nlohmann::ordered_json;

/// Compact serialisation with every floating-point number at 17
/// significant digits. Rejects non-finite numbers.
std::string dump(const Json& value);

/// Parses `text`; failures become FormatError mentioning `what`.
Json parse(std::string_view text, std::string_view what);

Json mat_to_json(const Mat& m);
/// Reads a {"rows","cols","data"} block; `block` names it in errors.
Mat mat_from_json(const Json& j, const std::string& block);

Json doubles_to_json(std::span<const double> values);
std::vector<double> doubles_from_json(const Json& j, const std::string& block);
std::vector<int> ints_from_json(const Json& j, const std::string& block);

/// Typed member access with FormatError on absence or wrong type.
const Json& member(const Json& obj, const char* key, const std::string& block);
double number_member(const Json& obj, const char* key, const std::string& block);
long long int_member(const Json& obj, const char* key, const std::string& block);
std::string string_member(const Json& obj, const char* key, const std::string& block);
bool bool_member(const Json& obj, const char* key, const std::string& block);

}  // namespace predbranch::detail

// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "json_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "predbranch/errors.hpp"
#include "predbranch/textio.hpp"

namespace predbranch {

std::string format_double(double value) {
  if (!std::isfinite(value)) throw NumericalFailure("cannot serialise a non-finite number");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failure on '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

namespace detail {
namespace {

void dump_into(const Json& v, std::string& out) {
  switch (v.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) out += ',';
        first = false;
        out += Json(key).dump();
        out += ':';
        dump_into(item, out);
      }
      out += '}';
      break;
    }
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ',';
        first = false;
        dump_into(item, out);
      }
      out += ']';
      break;
    }
    case Json::value_t::number_float:
      out += format_double(v.get<double>());
      break;
    default:
      out += v.dump();
      break;
  }
}

[[noreturn]] void fail(const std::string& block, const std::string& msg) {
  throw FormatError(block + ": " + msg);
}

}  // namespace

std::string dump(const Json& value) {
  std::string out;
  dump_into(value, out);
  return out;
}

Json parse(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string(what) + ": malformed JSON (" + e.what() + ")");
  }
}

Json doubles_to_json(std::span<const double> values) {
  Json arr = Json::array();
  for (double v : values) arr.push_back(v);
  return arr;
}

std::vector<double> doubles_from_json(const Json& j, const std::string& block) {
  if (!j.is_array()) fail(block, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    if (!item.is_number()) fail(block, "non-numeric entry");
    const double v = item.get<double>();
    if (!std::isfinite(v)) fail(block, "non-finite entry");
    out.push_back(v);
  }
  return out;
}

std::vector<int> ints_from_json(const Json& j, const std::string& block) {
  if (!j.is_array()) fail(block, "expected an array of integers");
  std::vector<int> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    if (!item.is_number_integer()) fail(block, "non-integer entry");
    out.push_back(item.get<int>());
  }
  return out;
}

Json mat_to_json(const Mat& m) {
  Json j = Json::object();
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = doubles_to_json(m.span());
  return j;
}

Mat mat_from_json(const Json& j, const std::string& block) {
  if (!j.is_object()) fail(block, "expected a matrix object");
  const long long rows = int_member(j, "rows", block);
  const long long cols = int_member(j, "cols", block);
  if (rows < 0 || cols < 0) fail(block, "negative dimension");
  std::vector<double> data = doubles_from_json(member(j, "data", block), block + ".data");
  const auto expected = static_cast<std::size_t>(rows * cols);
  if (data.size() != expected) {
    fail(block, "expected " + std::to_string(expected) + " values, found " + std::to_string(data.size()));
  }
  return Mat(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(data));
}

const Json& member(const Json& obj, const char* key, const std::string& block) {
  if (!obj.is_object()) fail(block, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(block, std::string("missing field '") + key + "'");
  return *it;
}

double number_member(const Json& obj, const char* key, const std::string& block) {
  const Json& v = member(obj, key, block);
  if (!v.is_number()) fail(block, std::string("field '") + key + "' is not a number");
  return v.get<double>();
}

long long int_member(const Json& obj, const char* key, const std::string& block) {
  const Json& v = member(obj, key, block);
  if (!v.is_number_integer()) fail(block, std::string("field '") + key + "' is not an integer");
  return v.get<long long>();
}

std::string string_member(const Json& obj, const char* key, const std::string& block) {
  const Json& v = member(obj, key, block);
  if (!v.is_string()) fail(block, std::string("field '") + key + "' is not a string");
  return v.get<std::string>();
}

bool bool_member(const Json& obj, const char* key, const std::string& block) {
  const Json& v = member(obj, key, block);
  if (!v.is_boolean()) fail(block, std::string("field '") + key + "' is not a boolean");
  return v.get<bool>();
}

}  // namespace detail
}  // namespace predbranch

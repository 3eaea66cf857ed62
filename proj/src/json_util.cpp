// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/json_util.hpp"

#include <fstream>
#include <sstream>

namespace vptdn {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_json_text(ss.str());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

nlohmann::json parse_json_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into a line/column pair.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw std::runtime_error("JSON syntax error at line " + std::to_string(line) + ", column " +
                             std::to_string(col));
  }
}

JsonReader::JsonReader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
  if (!obj_.is_object()) throw JsonFieldError(path_, "expected an object");
}

void JsonReader::require_keys(std::initializer_list<const char*> keys) const {
  for (const char* k : keys) {
    if (!obj_.contains(k)) throw JsonFieldError(field_path(k), "missing required field");
  }
}

void JsonReader::allow_only(std::initializer_list<const char*> keys) const {
  for (auto it = obj_.begin(); it != obj_.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw JsonFieldError(field_path(it.key()), "unknown field");
  }
}

const nlohmann::json& JsonReader::at(const std::string& key) const {
  if (!obj_.contains(key)) throw JsonFieldError(field_path(key), "missing required field");
  return obj_.at(key);
}

double JsonReader::number(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_number()) throw JsonFieldError(field_path(key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw JsonFieldError(field_path(key), "expected a finite number");
  return d;
}

double JsonReader::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

int JsonReader::integer(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_number_integer()) throw JsonFieldError(field_path(key), "expected an integer");
  return v.get<int>();
}

int JsonReader::integer_or(const std::string& key, int fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::uint64_t JsonReader::uint64(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw JsonFieldError(field_path(key), "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string JsonReader::string(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_string()) throw JsonFieldError(field_path(key), "expected a string");
  return v.get<std::string>();
}

bool JsonReader::boolean(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_boolean()) throw JsonFieldError(field_path(key), "expected a boolean");
  return v.get<bool>();
}

const nlohmann::json& JsonReader::array(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_array()) throw JsonFieldError(field_path(key), "expected an array");
  return v;
}

JsonReader JsonReader::object(const std::string& key) const { return JsonReader(at(key), field_path(key)); }

Vec3 JsonReader::vec3(const std::string& key) const {
  const auto& v = array(key);
  if (v.size() != 3) throw JsonFieldError(field_path(key), "expected 3 numbers");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) throw JsonFieldError(field_path(key) + "/" + std::to_string(i), "expected a number");
    out[i] = v[i].get<double>();
    if (!std::isfinite(out[i])) throw JsonFieldError(field_path(key), "expected finite numbers");
  }
  return out;
}

Color JsonReader::color(const std::string& key) const {
  const Vec3 v = vec3(key);
  return Color(v.x(), v.y(), v.z());
}

std::array<int, 3> JsonReader::dims(const std::string& key) const {
  const auto& v = array(key);
  if (v.size() != 3) throw JsonFieldError(field_path(key), "expected 3 integers");
  std::array<int, 3> out{};
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number_integer() || v[i].get<int>() <= 0) {
      throw JsonFieldError(field_path(key) + "/" + std::to_string(i), "expected a positive integer");
    }
    out[static_cast<std::size_t>(i)] = v[i].get<int>();
  }
  return out;
}

}  // namespace vptdn

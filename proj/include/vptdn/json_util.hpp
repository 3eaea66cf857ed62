// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/math.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace vptdn {

/// Document error carrying the JSON pointer of the offending field.
class JsonFieldError : public std::runtime_error {
 public:
  JsonFieldError(std::string field, const std::string& message)
      : std::runtime_error((field.empty() ? std::string("/") : field) + ": " + message),
        field_(std::move(field)), message_(message) {}
  const std::string& field() const { return field_; }
  const std::string& message() const { return message_; }

 private:
  std::string field_;
  std::string message_;
};

/// Parses a file; syntax errors report line and column.
nlohmann::json read_json_file(const std::filesystem::path& path);
nlohmann::json parse_json_text(const std::string& text);

/// Typed access to one JSON object with path-qualified errors.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& obj, std::string path);

  const std::string& path() const { return path_; }
  std::string field_path(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) const { return obj_.contains(key); }

  void require_keys(std::initializer_list<const char*> keys) const;
  /// Rejects any key outside the allowed set.
  void allow_only(std::initializer_list<const char*> keys) const;

  const nlohmann::json& at(const std::string& key) const;
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  int integer(const std::string& key) const;
  int integer_or(const std::string& key, int fallback) const;
  std::uint64_t uint64(const std::string& key) const;
  std::string string(const std::string& key) const;
  bool boolean(const std::string& key) const;
  const nlohmann::json& array(const std::string& key) const;
  JsonReader object(const std::string& key) const;
  Vec3 vec3(const std::string& key) const;
  Color color(const std::string& key) const;
  std::array<int, 3> dims(const std::string& key) const;

 private:
  const nlohmann::json& obj_;
  std::string path_;
};

}  // namespace vptdn

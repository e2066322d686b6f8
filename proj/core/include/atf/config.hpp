// SPDX-License-Identifier: Apache-2.0
/**
 * @file   config.hpp
 * @brief  Line-oriented `key = value` configuration files.
 *
 * Format: one assignment per line, `#` starts a comment, blank lines are
 * ignored, keys are [a-z0-9_.]+, values are trimmed. Duplicate keys are an
 * error. Interpretation and validation belong to each config type's schema.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace atf {

class KeyValues {
 public:
  static KeyValues parse(std::string_view text, const std::string &source);
  static KeyValues read(const std::filesystem::path &path);

  void set(const std::string &key, const std::string &value);
  bool contains(const std::string &key) const;
  const std::map<std::string, std::string> &items() const { return items_; }

 private:
  std::map<std::string, std::string> items_;
};

/// One key of a config schema: how to parse it into the target object and how
/// to print it back canonically.
template <typename T> struct SchemaKey {
  std::string key;
  std::string help;
  std::function<void(T &, const std::string &)> parse;
  std::function<std::string(const T &)> print;
};

template <typename T> using Schema = std::vector<SchemaKey<T>>;

/// Applies every entry of `kv` through `schema`. Unknown keys or unparsable
/// values raise a config error naming the key.
template <typename T>
void apply_schema(const Schema<T> &schema, const KeyValues &kv, T &target);

template <typename T>
std::string print_schema(const Schema<T> &schema, const T &value);

template <typename T> std::string schema_help(const Schema<T> &schema);

// Value parsers used by schemas; they throw std::invalid_argument.
bool parse_bool(const std::string &s);
std::int64_t parse_int(const std::string &s);
double parse_real(const std::string &s);
std::vector<std::int64_t> parse_int_list(const std::string &s);
std::string format_real(double v);

/// 64-bit FNV-1a hash.
std::uint64_t fnv1a64(std::string_view bytes);

} // namespace atf

#include "atf/config_impl.hpp"

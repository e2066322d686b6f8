// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

#include "atf/error.hpp"

namespace atf {

template <typename T>
void apply_schema(const Schema<T> &schema, const KeyValues &kv, T &target) {
  for (const auto &[key, value] : kv.items()) {
    const SchemaKey<T> *entry = nullptr;
    for (const auto &k : schema)
      if (k.key == key)
        entry = &k;
    if (!entry)
      fail(ErrorKind::kConfig, "unknown key '" + key + "'");
    try {
      entry->parse(target, value);
    } catch (const std::invalid_argument &e) {
      fail(ErrorKind::kConfig,
           "key '" + key + "': " + e.what() + " (expected " + entry->help + ")");
    } catch (const std::out_of_range &e) {
      fail(ErrorKind::kConfig, "key '" + key + "': value out of range");
    }
  }
}

template <typename T>
std::string print_schema(const Schema<T> &schema, const T &value) {
  std::string out;
  for (const auto &k : schema)
    out += k.key + " = " + k.print(value) + "\n";
  return out;
}

template <typename T> std::string schema_help(const Schema<T> &schema) {
  std::string out;
  for (const auto &k : schema)
    out += "  " + k.key + ": " + k.help + "\n";
  return out;
}

} // namespace atf

// SPDX-License-Identifier: Apache-2.0
#include "atf/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace atf {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key(const std::string &key) {
  if (key.empty())
    return false;
  for (char c : key)
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
          c == '.'))
      return false;
  return true;
}

} // namespace

KeyValues KeyValues::parse(std::string_view text, const std::string &source) {
  KeyValues kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty())
      continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos)
      fail(ErrorKind::kConfig, where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!valid_key(key))
      fail(ErrorKind::kConfig, where + ": invalid key '" + key + "'");
    if (kv.contains(key))
      fail(ErrorKind::kConfig, where + ": duplicate key '" + key + "'");
    kv.items_[key] = value;
  }
  return kv;
}

KeyValues KeyValues::read(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorKind::kMissingFile, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValues::set(const std::string &key, const std::string &value) {
  if (!valid_key(key))
    fail(ErrorKind::kConfig, "invalid key '" + key + "'");
  items_[key] = value;
}

bool KeyValues::contains(const std::string &key) const {
  return items_.count(key) != 0;
}

bool parse_bool(const std::string &s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on")
    return true;
  if (s == "false" || s == "0" || s == "no" || s == "off")
    return false;
  throw std::invalid_argument("'" + s + "' is not a boolean");
}

std::int64_t parse_int(const std::string &s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("'" + s + "' is not an integer");
  return v;
}

double parse_real(const std::string &s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    throw std::invalid_argument("'" + s + "' is not a number");
  }
  if (used != s.size() || !std::isfinite(v))
    throw std::invalid_argument("'" + s + "' is not a finite number");
  return v;
}

std::vector<std::int64_t> parse_int_list(const std::string &s) {
  std::vector<std::int64_t> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ','))
    out.push_back(parse_int(trim(item)));
  return out;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // shortest representation that round-trips
  for (int prec = 1; prec < 17; ++prec) {
    char tmp[64];
    std::snprintf(tmp, sizeof tmp, "%.*g", prec, v);
    if (std::stod(tmp) == v)
      return tmp;
  }
  return buf;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace atf

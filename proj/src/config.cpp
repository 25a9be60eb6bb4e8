// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#include "config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace skws {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap m;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    require(eq != std::string::npos && eq > 0, ErrorKind::Format,
            "config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    require(!m.contains(key), ErrorKind::Format,
            "config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    m[key] = trim(t.substr(eq + 1));
  }
  return m;
}

std::string format_config_text(const ConfigMap& map) {
  std::string out;
  for (const auto& [k, v] : map) out += k + "=" + v + "\n";
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for '" + path + "'");
}

std::size_t config_count(const ConfigMap& m, const std::string& key, std::size_t fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  std::size_t v = 0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(), ErrorKind::Usage,
          "config key '" + key + "' expects a non-negative integer, got '" + s + "'");
  return v;
}

double config_real(const ConfigMap& m, const std::string& key, double fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  const auto& s = it->second;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(), ErrorKind::Usage,
          "config key '" + key + "' expects a number, got '" + s + "'");
  return v;
}

bool config_flag(const ConfigMap& m, const std::string& key, bool fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  if (it->second == "1" || it->second == "true") return true;
  if (it->second == "0" || it->second == "false") return false;
  fail(ErrorKind::Usage, "config key '" + key + "' expects true/false, got '" + it->second + "'");
}

std::string config_string(const ConfigMap& m, const std::string& key,
                          const std::string& fallback) {
  const auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace skws

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors
//
// Canonical key=value configuration text: one pair per line, keys sorted,
// '#' starts a comment line.

#pragma once

#include <map>
#include <string>

namespace skws {

using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
std::string format_config_text(const ConfigMap& map);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Typed accessors. Each throws ErrorKind::Usage naming the key on a bad value.
std::size_t config_count(const ConfigMap& m, const std::string& key, std::size_t fallback);
double config_real(const ConfigMap& m, const std::string& key, double fallback);
bool config_flag(const ConfigMap& m, const std::string& key, bool fallback);
std::string config_string(const ConfigMap& m, const std::string& key, const std::string& fallback);

// Shortest text that parses back to exactly the same double.
std::string format_real(double v);

}  // namespace skws

// Copyright 2026 The mstress Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Study configuration: one INI/TOML-style file of `key = value` lines under
// `[section]` headers, flattened to "section.key". Keys above the first
// header (such as `seed`) have no section prefix. Values may be quoted;
// lists are comma separated.

#ifndef MSTRESS_CONFIG_H_
#define MSTRESS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mstress::config {

class Config {
 public:
  Config() = default;

  // Relative paths resolve against `base_dir`.
  static Config parse(std::istream& in, std::filesystem::path base_dir = {});
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value);
  // "section.key=value".
  void apply_override(std::string_view assignment);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;

  // Typed accessors throw ConfigError on unparseable values.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  size_t get_size(const std::string& key, size_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    std::vector<std::string> fallback = {}) const;
  std::vector<double> get_double_list(const std::string& key) const;
  // ConfigError when missing or when the file does not exist.
  std::filesystem::path require_path(const std::string& key) const;
  uint64_t require_seed() const;

  // Throws ConfigError naming the first key outside `known`.
  void check_known(const std::set<std::string>& known) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }

  // Sorted "key = value" lines; the hash is SHA-256 over them.
  std::string canonical() const;
  std::string hash() const;

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
};

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace mstress::config

#endif  // MSTRESS_CONFIG_H_

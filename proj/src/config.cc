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

#include "mstress/config.h"

#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "mstress/error.h"
#include "mstress/text.h"

namespace mstress::config {

namespace {

// Strips one pair of enclosing quotes, unless the quote character recurs
// inside (a quoted list such as "a", "b").
std::string unquote(std::string_view raw) {
  std::string v = text::trim(raw);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front() &&
      v.find(v.front(), 1) == v.size() - 1) {
    v = v.substr(1, v.size() - 2);
  }
  return v;
}

std::string hex(const unsigned char* digest, size_t n) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (size_t i = 0; i < n; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

}  // namespace

Config Config::parse(std::istream& in, std::filesystem::path base_dir) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) +
                      ")");
  }
  Config cfg;
  cfg.base_dir_ = std::move(base_dir);
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      cfg.values_[name] = unquote(node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) {
      cfg.values_[name + "." + key] = unquote(leaf.data());
    }
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse(in, path.parent_path());
}

void Config::set(const std::string& key, std::string value) {
  values_[key] = unquote(value);
}

void Config::apply_override(std::string_view assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like section.key=value: " +
                      std::string(assignment));
  }
  set(std::string(text::trim(assignment.substr(0, eq))),
      std::string(assignment.substr(eq + 1)));
}

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  return get(key).value_or(fallback);
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError("config key " + key + " must be an integer, got '" + *v + "'");
  }
  return out;
}

size_t Config::get_size(const std::string& key, size_t fallback) const {
  const int64_t v = get_int(key, static_cast<int64_t>(fallback));
  if (v < 0) throw ConfigError("config key " + key + " must be non-negative");
  return static_cast<size_t>(v);
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError("config key " + key + " must be a number, got '" + *v + "'");
  }
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  const std::string s = text::ascii_lower(*v);
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw ConfigError("config key " + key + " must be a boolean, got '" + *v + "'");
}

std::vector<std::string> Config::get_list(const std::string& key,
                                          std::vector<std::string> fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::vector<std::string> out;
  for (const std::string& item : text::split(*v, ',')) {
    std::string t = unquote(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : get_list(key)) {
    double d = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), d);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError("config key " + key + " holds a non-number '" + item + "'");
    }
    out.push_back(d);
  }
  return out;
}

std::filesystem::path Config::require_path(const std::string& key) const {
  const auto v = get(key);
  if (!v || v->empty()) throw ConfigError("config key " + key + " is required");
  std::filesystem::path p(*v);
  if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
  if (!std::filesystem::exists(p)) {
    throw ConfigError("config key " + key + ": file " + p.string() + " does not exist");
  }
  return p;
}

uint64_t Config::require_seed() const {
  if (!has("seed")) throw ConfigError("a seed is required (config key 'seed' or --seed)");
  const int64_t s = get_int("seed", 0);
  if (s < 0) throw ConfigError("seed must be non-negative");
  return static_cast<uint64_t>(s);
}

void Config::check_known(const std::set<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (known.count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string Config::canonical() const {
  std::ostringstream os;
  for (const auto& [key, value] : values_) os << key << " = " << value << '\n';
  return os.str();
}

std::string Config::hash() const { return sha256_hex(canonical()); }

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      EVP_MD_CTX_free(ctx_);
      throw Error("SHA-256 initialisation failed");
    }
  }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  ~Sha256() { EVP_MD_CTX_free(ctx_); }

  void update(const void* data, size_t n) { EVP_DigestUpdate(ctx_, data, n); }

  std::string hex_digest() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    EVP_DigestFinal_ex(ctx_, digest, &n);
    return hex(digest, n);
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex_digest();
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) h.update(buf.data(), static_cast<size_t>(in.gcount()));
  }
  return h.hex_digest();
}

}  // namespace mstress::config

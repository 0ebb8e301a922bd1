// Copyright 2026 The LWSNet Authors. All Rights Reserved.
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

#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <system_error>

namespace lwsnet::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v, const std::string& source, int line) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(source, line, "invalid value '" + std::string(v) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v, const std::string& source, int line) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(source, line, "invalid boolean '" + std::string(v) + "' for " + std::string(key));
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& what)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + what
                                  : source + ": " + what),
      line_(line) {}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k{
      "epochs",          "batch_size",      "learning_rate",   "optimizer",
      "seed",            "augment_flip",    "checkpoint_every", "checkpoint_path",
      "positive_weight", "crop_stride"};
  return k;
}

void RunConfig::set(std::string_view key, std::string_view value, const std::string& source,
                    int line) {
  if (key == "epochs") {
    train.epochs = parse_number<int>(key, value, source, line);
  } else if (key == "batch_size") {
    train.batch_size = parse_number<int>(key, value, source, line);
  } else if (key == "learning_rate") {
    train.learning_rate = parse_number<double>(key, value, source, line);
  } else if (key == "optimizer") {
    const auto k = parse_optimizer(value);
    if (!k) throw ConfigError(source, line, "unknown optimizer '" + std::string(value) + "'");
    train.optimizer = *k;
  } else if (key == "seed") {
    train.seed = parse_number<std::uint64_t>(key, value, source, line);
  } else if (key == "augment_flip") {
    train.augment_flip = parse_bool(key, value, source, line);
  } else if (key == "checkpoint_every") {
    train.checkpoint_every = parse_number<int>(key, value, source, line);
  } else if (key == "checkpoint_path") {
    train.checkpoint_path = std::string(value);
  } else if (key == "positive_weight") {
    train.positive_weight = parse_number<double>(key, value, source, line);
  } else if (key == "crop_stride") {
    crop_stride = parse_number<std::size_t>(key, value, source, line);
    if (crop_stride == 0) throw ConfigError(source, line, "crop_stride must be >= 1");
  } else {
    throw ConfigError(source, line, "unknown key '" + std::string(key) + "'");
  }
}

void apply_config(std::istream& in, const std::string& source, RunConfig& cfg) {
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError(source, line, "expected 'key = value'");
    const auto key = trim(s.substr(0, eq));
    const auto value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line, "missing key");
    if (value.empty()) throw ConfigError(source, line, "missing value for " + std::string(key));
    cfg.set(key, value, source, line);
  }
}

void apply_config_file(const std::filesystem::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  apply_config(in, path.string(), cfg);
}

}  // namespace lwsnet::cli

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

#ifndef LWSNET_TOOLS_RUN_CONFIG_HPP_
#define LWSNET_TOOLS_RUN_CONFIG_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lwsnet/train.hpp"

namespace lwsnet::cli {

/// Bad config file content. line() is 1-based; 0 for values set from flags.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Training run settings: the library TrainConfig plus data plumbing.
struct RunConfig {
  TrainConfig train;
  // Stride of the 224 x 224 training crops (50% overlap by default).
  std::size_t crop_stride = 112;

  /// Sets one key from its textual value. Throws ConfigError for unknown keys
  /// and malformed values.
  void set(std::string_view key, std::string_view value, const std::string& source = "<flags>",
           int line = 0);

  static const std::vector<std::string>& keys();
};

/// Applies `key = value` lines on top of cfg. Blank lines and `#` comments
/// (whole-line or trailing) are ignored.
void apply_config(std::istream& in, const std::string& source, RunConfig& cfg);
void apply_config_file(const std::filesystem::path& path, RunConfig& cfg);

}  // namespace lwsnet::cli

#endif  // LWSNET_TOOLS_RUN_CONFIG_HPP_

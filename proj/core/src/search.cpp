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

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

#include "lwsnet/arch.hpp"

namespace lwsnet {
namespace {

std::vector<Fraction> sixteenths() {
  std::vector<Fraction> out;
  for (int n : {1, 2, 3, 4, 5, 6, 7, 8, 10, 12}) out.push_back({n, 16});
  return out;
}

// Integer widths F * num / den that are >= 1, deduplicated and sorted.
std::vector<int> widths_for(const std::vector<Fraction>& fractions, int f) {
  std::set<int> out;
  for (const auto& fr : fractions) {
    if (fr.den <= 0 || fr.num <= 0) continue;
    const long long scaled = static_cast<long long>(f) * fr.num;
    if (scaled % fr.den != 0) continue;
    const int w = static_cast<int>(scaled / fr.den);
    if (w >= 1) out.insert(w);
  }
  return {out.begin(), out.end()};
}

auto key(const InceptionConfig& c) {
  return std::make_tuple(!c.with_bias, !c.with_bn, !c.pool_branch, c.b1_width, c.b2_reduce,
                         c.b2_width, c.b3_reduce, c.b3_width, c.b4_width);
}

}  // namespace

SearchSpace SearchSpace::default_grid() {
  SearchSpace s;
  s.b1 = s.b2_reduce = s.b2 = s.b3_reduce = s.b3 = s.b4 = sixteenths();
  return s;
}

SearchSpace SearchSpace::ref_config_a_only() {
  SearchSpace s;
  s.b1 = {{1, 4}};
  s.b2_reduce = {{3, 8}};
  s.b2 = {{1, 2}};
  s.b3_reduce = {{1, 16}};
  s.b3 = {{1, 8}};
  s.b4 = {{1, 8}};
  s.bias_options = {true};
  s.bn_options = {true};
  s.pool_branch_options = {true};
  return s;
}

std::vector<SearchHit> search_inception_config(int in_channels, int out_channels,
                                               std::int64_t target, const SearchSpace& space,
                                               std::size_t max_nearest) {
  if (in_channels < 1 || out_channels < 1) {
    throw std::invalid_argument("search needs positive channel counts");
  }
  const auto b1 = widths_for(space.b1, out_channels);
  const auto b2r = widths_for(space.b2_reduce, out_channels);
  const auto b2 = widths_for(space.b2, out_channels);
  const auto b3r = widths_for(space.b3_reduce, out_channels);
  const auto b3 = widths_for(space.b3, out_channels);
  const auto b4 = widths_for(space.b4, out_channels);
  bool needs_b4 = std::find(space.pool_branch_options.begin(), space.pool_branch_options.end(),
                            true) != space.pool_branch_options.end();
  if (b1.empty() || b2r.empty() || b2.empty() || b3r.empty() || b3.empty() ||
      (needs_b4 && b4.empty()) || space.bias_options.empty() || space.bn_options.empty() ||
      space.pool_branch_options.empty()) {
    throw std::invalid_argument("empty search space for out_channels " +
                                std::to_string(out_channels));
  }

  std::vector<SearchHit> exact;
  std::vector<SearchHit> all;
  auto consider = [&](const InceptionConfig& c) {
    const std::int64_t count = inception_param_count(in_channels, c);
    const std::int64_t distance = count > target ? count - target : target - count;
    SearchHit hit{c, count, distance};
    if (distance == 0) {
      exact.push_back(hit);
    } else if (exact.empty()) {
      all.push_back(hit);
    }
  };

  for (bool pool : space.pool_branch_options) {
    const std::vector<int> b4_choices = pool ? b4 : std::vector<int>{0};
    for (bool bias : space.bias_options) {
      for (bool bn : space.bn_options) {
        for (int w1 : b1) {
          for (int w2 : b2) {
            for (int w3 : b3) {
              for (int w4 : b4_choices) {
                if (w1 + w2 + w3 + w4 != out_channels) continue;
                for (int r2 : b2r) {
                  for (int r3 : b3r) {
                    consider(InceptionConfig{out_channels, w1, r2, w2, r3, w3, w4, bias, bn, pool});
                  }
                }
              }
            }
          }
        }
      }
    }
  }

  auto by_key = [](const SearchHit& a, const SearchHit& b) { return key(a.config) < key(b.config); };
  if (!exact.empty()) {
    std::sort(exact.begin(), exact.end(), by_key);
    return exact;
  }
  std::sort(all.begin(), all.end(), [&](const SearchHit& a, const SearchHit& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return by_key(a, b);
  });
  if (all.size() > max_nearest) all.resize(max_nearest);
  return all;
}

}  // namespace lwsnet

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

#include "lwsnet/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lwsnet {

BinaryMask close_horizontal(const BinaryMask& mask, int len) {
  if (len < 1) throw std::invalid_argument("closing length must be >= 1");
  const std::size_t h = mask.height, w = mask.width;
  const std::ptrdiff_t left = (len - 1) / 2, right = len - 1 - left;
  const auto sw = static_cast<std::ptrdiff_t>(w);
  BinaryMask dilated(h, w), out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    const std::uint8_t* src = &mask.bits[y * w];
    std::uint8_t* dst = &dilated.bits[y * w];
    for (std::ptrdiff_t x = 0; x < sw; ++x) {
      if (!src[x]) continue;
      // Reflected element: a set pixel at x covers [x - right, x + left].
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, x - right);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(sw - 1, x + left);
      for (std::ptrdiff_t k = lo; k <= hi; ++k) dst[k] = 1;
    }
  }
  for (std::size_t y = 0; y < h; ++y) {
    const std::uint8_t* src = &dilated.bits[y * w];
    std::uint8_t* dst = &out.bits[y * w];
    for (std::ptrdiff_t x = 0; x < sw; ++x) {
      bool all = true;
      for (std::ptrdiff_t k = x - left; k <= x + right && all; ++k) {
        if (k >= 0 && k < sw && !src[k]) all = false;
      }
      dst[x] = all ? 1 : 0;
    }
  }
  return out;
}

std::size_t label_components(const BinaryMask& mask, std::vector<std::uint32_t>& labels) {
  const std::size_t h = mask.height, w = mask.width;
  labels.assign(h * w, 0);
  std::uint32_t next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < h * w; ++start) {
    if (!mask.bits[start] || labels[start]) continue;
    labels[start] = ++next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      const std::size_t y = idx / w, x = idx % w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dy && !dx) continue;
          const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(y) + dy;
          const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(x) + dx;
          if (ny < 0 || nx < 0 || ny >= static_cast<std::ptrdiff_t>(h) ||
              nx >= static_cast<std::ptrdiff_t>(w)) {
            continue;
          }
          const std::size_t n = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
          if (mask.bits[n] && !labels[n]) {
            labels[n] = next;
            stack.push_back(n);
          }
        }
      }
    }
  }
  return next;
}

namespace {

struct ColumnRun {
  std::size_t top = std::numeric_limits<std::size_t>::max();
  std::size_t bottom = 0;  // inclusive
  std::size_t count = 0;
};

BinaryMask complete_once(const BinaryMask& mask, const EdgeCompletionOptions& opt) {
  const std::size_t h = mask.height, w = mask.width;
  BinaryMask closed = close_horizontal(mask, opt.close_len);
  std::vector<std::uint32_t> labels;
  const std::size_t n = label_components(closed, labels);

  // Pixel indices grouped by label (counting sort keeps raster order).
  std::vector<std::size_t> offset(n + 2, 0);
  for (std::size_t i = 0; i < h * w; ++i) ++offset[labels[i] + 1];
  for (std::size_t l = 1; l < offset.size(); ++l) offset[l] += offset[l - 1];
  std::vector<std::size_t> pixels(h * w);
  {
    std::vector<std::size_t> fill(offset.begin(), offset.end() - 1);
    for (std::size_t i = 0; i < h * w; ++i) pixels[fill[labels[i]]++] = i;
  }

  BinaryMask out(h, w);
  const double wide = opt.bridge_fraction * static_cast<double>(w);
  std::vector<ColumnRun> cols(w);
  for (std::uint32_t l = 1; l <= n; ++l) {
    const std::size_t begin = offset[l], end = offset[l + 1];
    if (end - begin < opt.min_area) continue;
    std::size_t min_x = w, max_x = 0;
    for (std::size_t k = begin; k < end; ++k) {
      out.bits[pixels[k]] = 1;
      min_x = std::min(min_x, pixels[k] % w);
      max_x = std::max(max_x, pixels[k] % w);
    }
    if (static_cast<double>(max_x - min_x + 1) < wide) continue;

    std::fill(cols.begin(), cols.end(), ColumnRun{});
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t y = pixels[k] / w, x = pixels[k] % w;
      ColumnRun& c = cols[x];
      c.top = std::min(c.top, y);
      c.bottom = std::max(c.bottom, y);
      ++c.count;
    }
    std::vector<std::size_t> thickness;
    std::vector<std::size_t> covered;
    for (std::size_t x = 0; x < w; ++x) {
      if (cols[x].count) {
        thickness.push_back(cols[x].count);
        covered.push_back(x);
      }
    }
    std::nth_element(thickness.begin(), thickness.begin() + static_cast<std::ptrdiff_t>(thickness.size() / 2),
                     thickness.end());
    const std::size_t median = thickness[thickness.size() / 2];

    // Nearest covered column (left wins ties).
    std::size_t k = 0;
    for (std::size_t x = 0; x < w; ++x) {
      if (cols[x].count) continue;
      while (k + 1 < covered.size() && covered[k + 1] < x) ++k;
      std::size_t src = covered[k];
      if (k + 1 < covered.size()) {
        const std::size_t a = x > covered[k] ? x - covered[k] : covered[k] - x;
        const std::size_t b = covered[k + 1] > x ? covered[k + 1] - x : x - covered[k + 1];
        if (b < a) src = covered[k + 1];
      }
      const ColumnRun& run = cols[src];
      const std::size_t len = std::min(run.count, median);
      for (std::size_t y = run.top; y < run.top + len; ++y) out.bits[y * w + x] = 1;
    }
  }
  return out;
}

}  // namespace

BinaryMask complete_edges(const BinaryMask& mask, const EdgeCompletionOptions& options) {
  if (options.close_len < 1) throw std::invalid_argument("close_len must be >= 1");
  BinaryMask current = complete_once(mask, options);
  // Each further pass only adds pixels, so this terminates within h * w steps.
  for (std::size_t guard = 0; guard <= mask.bits.size(); ++guard) {
    BinaryMask next = complete_once(current, options);
    if (next == current) return current;
    current = std::move(next);
  }
  return current;
}

}  // namespace lwsnet

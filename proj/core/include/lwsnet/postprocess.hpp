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

#ifndef LWSNET_POSTPROCESS_HPP_
#define LWSNET_POSTPROCESS_HPP_

#include <cstddef>
#include <vector>

#include "lwsnet/data.hpp"

namespace lwsnet {

struct EdgeCompletionOptions {
  int close_len = 15;
  double bridge_fraction = 0.6;
  std::size_t min_area = 20;
};

/// Morphological closing with a centered 1 x len horizontal element. Pixels
/// outside the image count as background for the dilation and foreground for
/// the erosion, so the result is always a superset of the input.
BinaryMask close_horizontal(const BinaryMask& mask, int len);

/// 8-connected component labels (0 = background, 1..n in raster-scan order
/// of each component's first pixel). Returns n.
std::size_t label_components(const BinaryMask& mask, std::vector<std::uint32_t>& labels);

/// Completes fragmented shelf edges:
///   1. horizontal closing with close_len
///   2. 8-connected labelling
///   3. components spanning >= bridge_fraction * W columns are extended to
///      the full width; each empty column copies the vertical run of the
///      nearest covered column, clamped to the component's median thickness
///   4. components smaller than min_area are dropped
/// The steps repeat until the mask stops changing, so the result is a fixed
/// point: complete_edges(complete_edges(m)) == complete_edges(m).
BinaryMask complete_edges(const BinaryMask& mask, const EdgeCompletionOptions& options = {});

}  // namespace lwsnet

#endif  // LWSNET_POSTPROCESS_HPP_

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

#ifndef LWSNET_EVAL_HPP_
#define LWSNET_EVAL_HPP_

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lwsnet/arch.hpp"
#include "lwsnet/data.hpp"
#include "lwsnet/postprocess.hpp"

namespace lwsnet {

struct IoUCounts {
  std::size_t intersection = 0;
  std::size_t union_ = 0;

  /// 1 when the union is empty.
  double value() const {
    return union_ == 0 ? 1.0 : static_cast<double>(intersection) / static_cast<double>(union_);
  }
};

/// Jaccard index of the shelf-edge class. Throws std::invalid_argument on a
/// size mismatch.
IoUCounts iou_counts(const BinaryMask& pred, const BinaryMask& gt);
double iou(const BinaryMask& pred, const BinaryMask& gt);

/// Per-pixel argmax over channel 0 (background) and 1 (shelf edge) of 2 x H x W
/// logits. Ties go to background.
BinaryMask argmax_mask(const Tensor<float>& logits);

/// Eval-mode logits for an arbitrary-size image: the image is reflection
/// padded to at least one window, tiled at stride == window, and tile logits
/// are stitched with later tiles overwriting earlier ones.
Tensor<float> predict_logits(const Model<float>& model, const Raster& image,
                             std::size_t window = 224);
BinaryMask predict_mask(const Model<float>& model, const Raster& image, std::size_t window = 224);

struct SampleIoU {
  std::string sample_id;
  IoUCounts raw;
  IoUCounts post;
};

struct SetReport {
  std::string name;
  std::vector<SampleIoU> samples;

  double mean_raw() const;
  double mean_post() const;
};

struct IoUReport {
  std::vector<SetReport> sets;
};

struct NamedSet {
  std::string name;
  std::vector<Sample> samples;
};

struct EvalOptions {
  EdgeCompletionOptions postprocess;
};

using MaskPredictor = std::function<BinaryMask(const Sample&)>;

/// Scores every set independently, both on the raw prediction and after
/// complete_edges().
IoUReport evaluate_sets(const MaskPredictor& predict, const std::vector<NamedSet>& sets,
                        const EvalOptions& options = {});
IoUReport evaluate_sets(const Model<float>& model, const std::vector<NamedSet>& sets,
                        const EvalOptions& options = {});

/// CSV "set,sample_id,iou" followed by one "<set>,mean,<value>" row per set.
void write_iou_csv(std::ostream& out, const IoUReport& report, bool postprocessed);

}  // namespace lwsnet

#endif  // LWSNET_EVAL_HPP_

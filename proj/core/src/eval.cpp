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

#include "lwsnet/eval.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace lwsnet {

IoUCounts iou_counts(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw std::invalid_argument("iou: prediction " + std::to_string(pred.height) + "x" +
                                std::to_string(pred.width) + " vs ground truth " +
                                std::to_string(gt.height) + "x" + std::to_string(gt.width));
  }
  IoUCounts c;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0, g = gt.bits[i] != 0;
    c.intersection += (p && g) ? 1 : 0;
    c.union_ += (p || g) ? 1 : 0;
  }
  return c;
}

double iou(const BinaryMask& pred, const BinaryMask& gt) { return iou_counts(pred, gt).value(); }

BinaryMask argmax_mask(const Tensor<float>& logits) {
  if (logits.rank() != 3 || logits.dim(0) != 2) {
    throw ShapeError("argmax_mask expects 2xHxW logits, got " + to_string(logits.shape()));
  }
  const std::size_t h = logits.dim(1), w = logits.dim(2), plane = h * w;
  BinaryMask out(h, w);
  for (std::size_t i = 0; i < plane; ++i) out.bits[i] = logits[plane + i] > logits[i] ? 1 : 0;
  return out;
}

Tensor<float> predict_logits(const Model<float>& model, const Raster& image, std::size_t window) {
  if (image.height == 0 || image.width == 0) throw std::invalid_argument("empty image");
  const Raster padded = reflect_pad(image, window, window);
  const auto ys = window_origins(padded.height, window, window);
  const auto xs = window_origins(padded.width, window, window);
  Tensor<float> canvas({2, padded.height, padded.width});
  Tensor<float> tile({1, window, window});
  for (std::size_t oy : ys) {
    for (std::size_t ox : xs) {
      for (std::size_t y = 0; y < window; ++y) {
        for (std::size_t x = 0; x < window; ++x) tile.at(0, y, x) = padded.at(oy + y, ox + x);
      }
      const Tensor<float> logits = model.predict(tile);
      for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t y = 0; y < window; ++y) {
          for (std::size_t x = 0; x < window; ++x) canvas.at(c, oy + y, ox + x) = logits.at(c, y, x);
        }
      }
    }
  }
  if (padded.height == image.height && padded.width == image.width) return canvas;
  Tensor<float> out({2, image.height, image.width});
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t y = 0; y < image.height; ++y) {
      for (std::size_t x = 0; x < image.width; ++x) out.at(c, y, x) = canvas.at(c, y, x);
    }
  }
  return out;
}

BinaryMask predict_mask(const Model<float>& model, const Raster& image, std::size_t window) {
  return argmax_mask(predict_logits(model, image, window));
}

namespace {

double mean_of(const std::vector<SampleIoU>& samples, bool post) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) acc += post ? s.post.value() : s.raw.value();
  return acc / static_cast<double>(samples.size());
}

}  // namespace

double SetReport::mean_raw() const { return mean_of(samples, false); }
double SetReport::mean_post() const { return mean_of(samples, true); }

IoUReport evaluate_sets(const MaskPredictor& predict, const std::vector<NamedSet>& sets,
                        const EvalOptions& options) {
  IoUReport report;
  for (const auto& set : sets) {
    SetReport sr;
    sr.name = set.name;
    for (const auto& sample : set.samples) {
      const BinaryMask pred = predict(sample);
      SampleIoU s;
      s.sample_id = sample.source_id;
      s.raw = iou_counts(pred, sample.mask);
      s.post = iou_counts(complete_edges(pred, options.postprocess), sample.mask);
      sr.samples.push_back(std::move(s));
    }
    report.sets.push_back(std::move(sr));
  }
  return report;
}

IoUReport evaluate_sets(const Model<float>& model, const std::vector<NamedSet>& sets,
                        const EvalOptions& options) {
  return evaluate_sets([&model](const Sample& s) { return predict_mask(model, s.image); }, sets,
                       options);
}

void write_iou_csv(std::ostream& out, const IoUReport& report, bool postprocessed) {
  char buf[64];
  out << "set,sample_id,iou\n";
  for (const auto& set : report.sets) {
    for (const auto& s : set.samples) {
      std::snprintf(buf, sizeof(buf), "%.6f", postprocessed ? s.post.value() : s.raw.value());
      out << set.name << ',' << s.sample_id << ',' << buf << '\n';
    }
  }
  for (const auto& set : report.sets) {
    std::snprintf(buf, sizeof(buf), "%.6f", postprocessed ? set.mean_post() : set.mean_raw());
    out << set.name << ",mean," << buf << '\n';
  }
}

}  // namespace lwsnet

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

#ifndef LWSNET_QUANTIZE_HPP_
#define LWSNET_QUANTIZE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lwsnet/arch.hpp"
#include "lwsnet/serialize.hpp"

namespace lwsnet {

struct QuantizedTensor {
  Shape shape;
  std::vector<std::int8_t> data;
  float scale = 1.0f;
  std::int32_t zero_point = 0;

  Tensor<float> dequantize() const;
};

/// Symmetric per-tensor int8: scale = max|w| / 127, q = clamp(round(w / scale),
/// -127, 127). An all-zero tensor gets scale 1.
QuantizedTensor quantize_tensor(const Tensor<float>& w);

/// Conv, affine and transposed-conv weights: names ending in "weight" with
/// rank >= 2. Biases, batch-norm affine terms and running stats stay f32.
bool is_quantizable(const std::string& name, const Shape& shape);

enum class QuantMode { kSymmetricPerTensor };

/// Immutable after construction; safe to share across threads for inference.
class QuantizedModel {
 public:
  QuantizedModel() = default;

  const std::map<std::string, QuantizedTensor>& quantized() const noexcept { return quantized_; }
  /// Float model whose quantized weights hold their dequantized values.
  const Model<float>& dequantized() const noexcept { return dequantized_; }
  bool empty() const noexcept { return dequantized_.empty(); }

  /// Checkpoint records: tag 1 for quantized weights, the rest as in
  /// model_records().
  std::vector<TensorRecord> records() const;

  static QuantizedModel from_records(const std::vector<TensorRecord>& records);

 private:
  friend QuantizedModel quantize_weights(const Model<float>&, QuantMode);

  std::map<std::string, QuantizedTensor> quantized_;
  Model<float> dequantized_;
};

QuantizedModel quantize_weights(const Model<float>& model,
                                QuantMode mode = QuantMode::kSymmetricPerTensor);

/// Eval-mode logits with f32 activations and dequantized weights.
Tensor<float> quantized_forward(const QuantizedModel& qmodel, const Tensor<float>& image);

void save_quantized(const QuantizedModel& qmodel, const std::filesystem::path& path);
QuantizedModel load_quantized(const std::filesystem::path& path);

struct SizeRow {
  std::string tensor;
  std::size_t float_bytes = 0;
  std::size_t int8_bytes = 0;
  // 0 for tensors kept in f32.
  float scale = 0.0f;
};

struct SizeReport {
  std::vector<SizeRow> rows;
  // Serialized checkpoint sizes.
  std::size_t float_file_bytes = 0;
  std::size_t quantized_file_bytes = 0;

  /// float / quantized; 1 for an empty model.
  double ratio() const;
};

SizeReport size_report(const Model<float>& model, const QuantizedModel& qmodel);

/// CSV "tensor,float_bytes,int8_bytes,scale" with a final "TOTAL" row holding
/// the serialized file sizes.
void write_size_csv(std::ostream& out, const SizeReport& report);

}  // namespace lwsnet

#endif  // LWSNET_QUANTIZE_HPP_

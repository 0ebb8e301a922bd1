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

// LWSN checkpoint format. All integers and floats are little-endian.
//
//   magic      "LWSN" (4 bytes)
//   version    u32 (= 1)
//   records    u32
//   per record:
//     name_len u16, name (UTF-8, name_len bytes)
//     tag      u8   0 = f32 tensor, 1 = int8 tensor, 2 = batch-norm running stat (f32)
//     rank     u8
//     extents  rank x u32
//     payload  tag 0/2: f32[numel]
//              tag 1:   i8[numel], f32 scale, i32 zero_point
//
// Trainable tensors come first in model order, running statistics last.

#ifndef LWSNET_SERIALIZE_HPP_
#define LWSNET_SERIALIZE_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "lwsnet/arch.hpp"

namespace lwsnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class RecordTag : std::uint8_t { kF32 = 0, kI8 = 1, kRunningStat = 2 };

struct TensorRecord {
  std::string name;
  RecordTag tag = RecordTag::kF32;
  Shape shape;
  std::vector<float> f32;        // tags 0 and 2
  std::vector<std::int8_t> i8;   // tag 1
  float scale = 1.0f;            // tag 1
  std::int32_t zero_point = 0;   // tag 1
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_records(std::ostream& out, const std::vector<TensorRecord>& records);
std::vector<TensorRecord> read_records(std::istream& in);

std::vector<std::uint8_t> encode_records(const std::vector<TensorRecord>& records);

/// f32 records for every parameter, then tag-2 records for running stats.
std::vector<TensorRecord> model_records(const Model<float>& model);

/// Rebuilds the layer graph from tensor names and shapes, then loads values.
/// Int8 records are dequantized (value = q * scale with zero point applied).
Model<float> model_from_records(const std::vector<TensorRecord>& records);

void save_model(const Model<float>& model, const std::filesystem::path& path);
Model<float> load_model(const std::filesystem::path& path);
std::vector<TensorRecord> load_records(const std::filesystem::path& path);
void save_records(const std::vector<TensorRecord>& records, const std::filesystem::path& path);

}  // namespace lwsnet

#endif  // LWSNET_SERIALIZE_HPP_

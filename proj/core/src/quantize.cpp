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

#include "lwsnet/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace lwsnet {

Tensor<float> QuantizedTensor::dequantize() const {
  Tensor<float> out(shape);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = scale * static_cast<float>(static_cast<std::int32_t>(data[i]) - zero_point);
  }
  return out;
}

QuantizedTensor quantize_tensor(const Tensor<float>& w) {
  QuantizedTensor q;
  q.shape = w.shape();
  float max_abs = 0.0f;
  for (float v : w.data()) max_abs = std::max(max_abs, std::fabs(v));
  q.scale = max_abs > 0.0f ? max_abs / 127.0f : 1.0f;
  q.data.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const float r = std::round(w[i] / q.scale);
    q.data[i] = static_cast<std::int8_t>(std::clamp(r, -127.0f, 127.0f));
  }
  return q;
}

bool is_quantizable(const std::string& name, const Shape& shape) {
  constexpr std::string_view kSuffix = "weight";
  return shape.size() >= 2 && name.size() >= kSuffix.size() &&
         name.compare(name.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0;
}

QuantizedModel quantize_weights(const Model<float>& model, QuantMode mode) {
  (void)mode;  // only symmetric per-tensor for now
  QuantizedModel q;
  q.dequantized_ = model;
  for (auto& p : q.dequantized_.parameters()) {
    p.grad = Tensor<float>();
    if (!is_quantizable(p.name, p.value.shape())) continue;
    QuantizedTensor qt = quantize_tensor(p.value);
    p.value = qt.dequantize();
    q.quantized_.emplace(p.name, std::move(qt));
  }
  return q;
}

std::vector<TensorRecord> QuantizedModel::records() const {
  std::vector<TensorRecord> out = model_records(dequantized_);
  for (auto& r : out) {
    auto it = quantized_.find(r.name);
    if (it == quantized_.end()) continue;
    r.tag = RecordTag::kI8;
    r.f32.clear();
    r.i8 = it->second.data;
    r.scale = it->second.scale;
    r.zero_point = it->second.zero_point;
  }
  return out;
}

QuantizedModel QuantizedModel::from_records(const std::vector<TensorRecord>& records) {
  QuantizedModel q;
  q.dequantized_ = model_from_records(records);
  for (const auto& r : records) {
    if (r.tag != RecordTag::kI8) continue;
    QuantizedTensor qt;
    qt.shape = r.shape;
    qt.data = r.i8;
    qt.scale = r.scale;
    qt.zero_point = r.zero_point;
    q.quantized_.emplace(r.name, std::move(qt));
  }
  return q;
}

Tensor<float> quantized_forward(const QuantizedModel& qmodel, const Tensor<float>& image) {
  return qmodel.dequantized().predict(image);
}

void save_quantized(const QuantizedModel& qmodel, const std::filesystem::path& path) {
  save_records(qmodel.records(), path);
}

QuantizedModel load_quantized(const std::filesystem::path& path) {
  return QuantizedModel::from_records(load_records(path));
}

double SizeReport::ratio() const {
  if (quantized_file_bytes == 0 || rows.empty()) return 1.0;
  return static_cast<double>(float_file_bytes) / static_cast<double>(quantized_file_bytes);
}

SizeReport size_report(const Model<float>& model, const QuantizedModel& qmodel) {
  SizeReport rep;
  if (model.empty()) return rep;
  for (const auto& p : model.parameters()) {
    SizeRow row;
    row.tensor = p.name;
    row.float_bytes = p.value.size() * sizeof(float);
    auto it = qmodel.quantized().find(p.name);
    if (it != qmodel.quantized().end()) {
      row.int8_bytes = it->second.data.size();
      row.scale = it->second.scale;
    } else {
      row.int8_bytes = row.float_bytes;
    }
    rep.rows.push_back(std::move(row));
  }
  rep.float_file_bytes = encode_records(model_records(model)).size();
  rep.quantized_file_bytes = encode_records(qmodel.records()).size();
  return rep;
}

void write_size_csv(std::ostream& out, const SizeReport& report) {
  char buf[64];
  out << "tensor,float_bytes,int8_bytes,scale\n";
  for (const auto& r : report.rows) {
    out << r.tensor << ',' << r.float_bytes << ',' << r.int8_bytes << ',';
    if (r.scale > 0.0f) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(r.scale));
      out << buf;
    }
    out << '\n';
  }
  std::snprintf(buf, sizeof(buf), "%.4f", report.ratio());
  out << "TOTAL," << report.float_file_bytes << ',' << report.quantized_file_bytes << ",ratio="
      << buf << '\n';
}

}  // namespace lwsnet

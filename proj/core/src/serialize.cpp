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

#include "lwsnet/serialize.hpp"

#include <bit>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace lwsnet {
namespace {

constexpr char kMagic[4] = {'L', 'W', 'S', 'N'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() {
    const int c = in_.get();
    if (c == std::char_traits<char>::eof()) throw FormatError("truncated checkpoint");
    return static_cast<std::uint8_t>(c);
  }
  std::uint16_t u16() {
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(u8()) << (8 * i);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("truncated checkpoint");
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_records(std::ostream& out, const std::vector<TensorRecord>& records) {
  Writer w(out);
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    if (r.name.size() > 0xFFFF) throw FormatError("record name too long: " + r.name);
    if (r.shape.size() > 0xFF) throw FormatError("record rank too large: " + r.name);
    w.u16(static_cast<std::uint16_t>(r.name.size()));
    w.bytes(r.name.data(), r.name.size());
    w.u8(static_cast<std::uint8_t>(r.tag));
    w.u8(static_cast<std::uint8_t>(r.shape.size()));
    for (auto e : r.shape) w.u32(static_cast<std::uint32_t>(e));
    const std::size_t n = numel(r.shape);
    if (r.tag == RecordTag::kI8) {
      if (r.i8.size() != n) throw FormatError("int8 payload size mismatch in " + r.name);
      w.bytes(r.i8.data(), n);
      w.f32(r.scale);
      w.u32(static_cast<std::uint32_t>(r.zero_point));
    } else {
      if (r.f32.size() != n) throw FormatError("f32 payload size mismatch in " + r.name);
      for (float v : r.f32) w.f32(v);
    }
  }
  if (!out) throw FormatError("failed to write checkpoint");
}

std::vector<TensorRecord> read_records(std::istream& in) {
  Reader rd(in);
  char magic[4];
  rd.bytes(magic, 4);
  if (std::string(magic, 4) != std::string(kMagic, 4)) throw FormatError("bad magic, not an LWSN file");
  const std::uint32_t version = rd.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = rd.u32();
  std::vector<TensorRecord> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorRecord r;
    r.name.resize(rd.u16());
    rd.bytes(r.name.data(), r.name.size());
    const std::uint8_t tag = rd.u8();
    if (tag > 2) throw FormatError("unknown dtype tag " + std::to_string(tag) + " in " + r.name);
    r.tag = static_cast<RecordTag>(tag);
    const std::uint8_t rank = rd.u8();
    for (std::uint8_t k = 0; k < rank; ++k) r.shape.push_back(rd.u32());
    const std::size_t n = numel(r.shape);
    if (r.tag == RecordTag::kI8) {
      r.i8.resize(n);
      rd.bytes(r.i8.data(), n);
      r.scale = rd.f32();
      r.zero_point = static_cast<std::int32_t>(rd.u32());
    } else {
      r.f32.resize(n);
      for (auto& v : r.f32) v = rd.f32();
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<std::uint8_t> encode_records(const std::vector<TensorRecord>& records) {
  std::ostringstream os(std::ios::binary);
  write_records(os, records);
  const std::string s = os.str();
  return {s.begin(), s.end()};
}

std::vector<TensorRecord> model_records(const Model<float>& model) {
  std::vector<TensorRecord> out;
  for (const auto& p : model.parameters()) {
    TensorRecord r;
    r.name = p.name;
    r.tag = RecordTag::kF32;
    r.shape = p.value.shape();
    r.f32.assign(p.value.data().begin(), p.value.data().end());
    out.push_back(std::move(r));
  }
  for (const auto& b : model.buffers()) {
    TensorRecord r;
    r.name = b.name;
    r.tag = RecordTag::kRunningStat;
    r.shape = b.value.shape();
    r.f32.assign(b.value.data().begin(), b.value.data().end());
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

Tensor<float> record_values(const TensorRecord& r) {
  if (r.tag == RecordTag::kI8) {
    std::vector<float> v(r.i8.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = static_cast<float>(static_cast<std::int32_t>(r.i8[i]) - r.zero_point) * r.scale;
    }
    return Tensor<float>(r.shape, std::move(v));
  }
  return Tensor<float>(r.shape, r.f32);
}

}  // namespace

Model<float> model_from_records(const std::vector<TensorRecord>& records) {
  if (records.empty()) return Model<float>{};
  std::map<std::string, const TensorRecord*> by_name;
  for (const auto& r : records) {
    if (!by_name.emplace(r.name, &r).second) throw FormatError("duplicate record " + r.name);
  }
  auto find = [&](const std::string& name) -> const TensorRecord* {
    auto it = by_name.find(name);
    return it == by_name.end() ? nullptr : it->second;
  };
  auto require = [&](const std::string& name) -> const TensorRecord& {
    const TensorRecord* r = find(name);
    if (!r) throw FormatError("checkpoint is missing " + name);
    return *r;
  };

  std::vector<InceptionConfig> configs;
  for (int k = 1; k <= 9; ++k) {
    const std::string layer = "Inception-" + std::to_string(k) + "/";
    InceptionConfig c;
    auto width = [&](const std::string& unit) {
      return static_cast<int>(require(layer + unit + ".conv.weight").shape.at(0));
    };
    c.b1_width = width("b1");
    c.b2_reduce = width("b2_reduce");
    c.b2_width = width("b2");
    c.b3_reduce = width("b3_reduce");
    c.b3_width = width("b3");
    c.pool_branch = find(layer + "b4.conv.weight") != nullptr;
    c.b4_width = c.pool_branch ? width("b4") : 0;
    c.with_bias = find(layer + "b1.conv.bias") != nullptr;
    c.with_bn = find(layer + "b1.bn.gamma") != nullptr;
    c.out_channels = c.b1_width + c.b2_width + c.b3_width + c.b4_width;
    configs.push_back(c);
  }
  BuildOptions options;
  if (const TensorRecord* fc1 = find("SE-1/fc1.weight")) {
    options.with_se = true;
    options.se_reduction = static_cast<int>(fc1->shape.at(1) / fc1->shape.at(0));
  } else {
    options.with_se = false;
  }
  options.num_classes = static_cast<int>(require("Final-conv/weight").shape.at(0));

  Model<float> model;
  try {
    model = build_lwsnet<float>(configs, options);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("inconsistent checkpoint: ") + e.what());
  }
  std::size_t used = 0;
  for (auto& p : model.parameters()) {
    const TensorRecord& r = require(p.name);
    if (r.tag == RecordTag::kRunningStat || r.shape != p.value.shape()) {
      throw FormatError("record " + p.name + " has shape " + to_string(r.shape) + ", expected " +
                        to_string(p.value.shape()));
    }
    p.value = record_values(r);
    ++used;
  }
  for (auto& b : model.buffers()) {
    const TensorRecord& r = require(b.name);
    if (r.tag != RecordTag::kRunningStat || r.shape != b.value.shape()) {
      throw FormatError("running stat " + b.name + " malformed");
    }
    b.value = Tensor<float>(r.shape, r.f32);
    ++used;
  }
  if (used != records.size()) {
    for (const auto& r : records) {
      if (!model.find_parameter(r.name) && !model.find_buffer(r.name)) {
        throw FormatError("unexpected record " + r.name);
      }
    }
  }
  return model;
}

void save_records(const std::vector<TensorRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_records(out, records);
}

std::vector<TensorRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_records(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_model(const Model<float>& model, const std::filesystem::path& path) {
  save_records(model_records(model), path);
}

Model<float> load_model(const std::filesystem::path& path) {
  return model_from_records(load_records(path));
}

}  // namespace lwsnet

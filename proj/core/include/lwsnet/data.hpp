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

#ifndef LWSNET_DATA_HPP_
#define LWSNET_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lwsnet/image_io.hpp"
#include "lwsnet/tensor.hpp"

namespace lwsnet {

/// Grayscale image, values in [0, 1], row-major.
struct Raster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;

  Raster() = default;
  Raster(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), pixels(h * w, fill) {}

  float& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  float at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
};

/// Binary raster; 1 marks a shelf-edge pixel.
struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), bits(h * w, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x) { return bits[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return bits[y * width + x]; }
  std::size_t count() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

struct Sample {
  Raster image;
  BinaryMask mask;
  std::string source_id;
  std::size_t crop_y = 0;
  std::size_t crop_x = 0;
};

/// 1 x H x W tensor view of a raster.
Tensor<float> image_tensor(const Raster& image);

Sample flip_horizontal(const Sample& sample);

// ---------------------------------------------------------------------------
// Synthetic shelf scenes.

enum class Regime { kCloseUp, kDistant, kMultiBlock, kMixed };

std::string_view regime_name(Regime regime);
/// Accepts close-up, distant, multi-block, mixed.
std::optional<Regime> parse_regime(std::string_view name);
inline constexpr Regime kAllRegimes[] = {Regime::kCloseUp, Regime::kDistant, Regime::kMultiBlock,
                                         Regime::kMixed};

struct IntRange {
  int min = 0;
  int max = 0;
};

/// Full-width horizontal band covering rows [top, top + thickness).
struct ShelfBand {
  std::size_t top = 0;
  std::size_t thickness = 0;
};

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t height = 224;
  std::size_t width = 224;
  Regime regime = Regime::kCloseUp;
  IntRange thickness{12, 18};
  IntRange shelf_count{2, 3};
  // Fraction of each between-shelf row span filled with product boxes.
  double product_density = 0.85;
  // Standard deviation of additive Gaussian pixel noise.
  double noise_amplitude = 0.03;
  // Explicit layout; overrides shelf_count and thickness when set.
  std::optional<std::vector<ShelfBand>> bands;

  static SynthSpec defaults(Regime regime, std::uint64_t seed, std::size_t height = 224,
                            std::size_t width = 224);
};

struct SyntheticScene {
  Sample sample;
  std::vector<ShelfBand> bands;
};

/// Deterministic in the spec. Throws std::invalid_argument when the bands
/// cannot fit on the canvas.
SyntheticScene generate_scene(const SynthSpec& spec);
Sample generate_synthetic(const SynthSpec& spec);

// ---------------------------------------------------------------------------
// Windowing.

/// Window origins along one axis: multiples of stride, then one window
/// anchored at the far edge so the axis is fully covered.
std::vector<std::size_t> window_origins(std::size_t extent, std::size_t window, std::size_t stride);

/// Reflection-pads a raster to at least min_h x min_w (padding added at the
/// bottom and right).
Raster reflect_pad(const Raster& image, std::size_t min_h, std::size_t min_w);
BinaryMask reflect_pad(const BinaryMask& mask, std::size_t min_h, std::size_t min_w);

/// Sliding window x window crops. Undersized inputs are reflection padded
/// first. Crop offsets are recorded in each sample.
std::vector<Sample> crop_windows(const Sample& sample, std::size_t window = 224,
                                 std::size_t stride = 224);

// ---------------------------------------------------------------------------
// Dataset directories: <id>.img.{png,pgm} paired with <id>.mask.{png,pgm}.

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetLoadReport {
  // Files that are neither a matched image nor a matched mask.
  std::vector<std::string> unmatched;
};

/// Luma (0.299 R + 0.587 G + 0.114 B) / 255.
Raster to_grayscale(const Image8& image);
/// Luma >= 128 maps to 1.
BinaryMask binarize(const Image8& image, int threshold = 128);

std::vector<Sample> load_dataset(const std::filesystem::path& dir,
                                 DatasetLoadReport* report = nullptr);

/// Writes <id>.img.png (8-bit gray) and <id>.mask.png (0/255).
void save_sample(const Sample& sample, const std::filesystem::path& dir, const std::string& id);

std::vector<std::uint8_t> to_bytes(const Raster& image);
std::vector<std::uint8_t> to_bytes(const BinaryMask& mask);

}  // namespace lwsnet

#endif  // LWSNET_DATA_HPP_

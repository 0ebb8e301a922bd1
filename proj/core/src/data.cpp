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

#include "lwsnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace lwsnet {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Tensor<float> image_tensor(const Raster& image) {
  return Tensor<float>(Shape{1, image.height, image.width}, image.pixels);
}

Sample flip_horizontal(const Sample& sample) {
  Sample out = sample;
  const std::size_t h = sample.image.height, w = sample.image.width;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      out.image.at(y, x) = sample.image.at(y, w - 1 - x);
      out.mask.at(y, x) = sample.mask.at(y, w - 1 - x);
    }
  }
  return out;
}

std::string_view regime_name(Regime regime) {
  switch (regime) {
    case Regime::kCloseUp: return "close-up";
    case Regime::kDistant: return "distant";
    case Regime::kMultiBlock: return "multi-block";
    case Regime::kMixed: return "mixed";
  }
  return "unknown";
}

std::optional<Regime> parse_regime(std::string_view name) {
  for (Regime r : kAllRegimes) {
    if (regime_name(r) == name) return r;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Synthesis

namespace {
constexpr std::size_t kMinGap = 6;
}  // namespace

SynthSpec SynthSpec::defaults(Regime regime, std::uint64_t seed, std::size_t height,
                              std::size_t width) {
  SynthSpec s;
  s.seed = seed;
  s.height = height;
  s.width = width;
  s.regime = regime;
  switch (regime) {
    case Regime::kCloseUp:
      s.thickness = {12, 18};
      s.shelf_count = {2, 3};
      break;
    case Regime::kDistant:
      s.thickness = {5, 8};
      s.shelf_count = {5, 7};
      break;
    case Regime::kMultiBlock:
      s.thickness = {8, 12};
      s.shelf_count = {4, 6};
      break;
    case Regime::kMixed:
      s.thickness = {5, 8};
      s.shelf_count = {6, 8};
      break;
  }
  // Shelf count scales with canvas height, capped so the thickest draw fits.
  const double scale = static_cast<double>(height) / 224.0;
  int lo = std::max(1, static_cast<int>(std::lround(s.shelf_count.min * scale)));
  int hi = std::max(lo, static_cast<int>(std::lround(s.shelf_count.max * scale)));
  const int fit = height > kMinGap
                      ? static_cast<int>((height - kMinGap) / (static_cast<std::size_t>(s.thickness.max) + kMinGap))
                      : 0;
  hi = std::min(hi, fit);
  lo = std::min(lo, hi);
  s.shelf_count = {lo, hi};
  return s;
}

namespace {

bool multi_block(Regime r) { return r == Regime::kMultiBlock || r == Regime::kMixed; }

class Painter {
 public:
  Painter(Raster& image, std::mt19937_64& rng) : img_(image), rng_(rng) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  void rect(std::size_t y0, std::size_t x0, std::size_t y1, std::size_t x1, float v) {
    y1 = std::min(y1, img_.height);
    x1 = std::min(x1, img_.width);
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = x0; x < x1; ++x) img_.at(y, x) = v;
    }
  }

 private:
  Raster& img_;
  std::mt19937_64& rng_;
};

std::vector<ShelfBand> place_bands(const SynthSpec& spec, std::mt19937_64& rng) {
  if (spec.bands) {
    for (const auto& b : *spec.bands) {
      if (b.thickness < 1 || b.top + b.thickness > spec.height) {
        throw std::invalid_argument("shelf band does not fit on the canvas");
      }
    }
    auto bands = *spec.bands;
    std::sort(bands.begin(), bands.end(), [](const ShelfBand& a, const ShelfBand& b) { return a.top < b.top; });
    for (std::size_t i = 1; i < bands.size(); ++i) {
      if (bands[i].top < bands[i - 1].top + bands[i - 1].thickness) {
        throw std::invalid_argument("shelf bands overlap");
      }
    }
    return bands;
  }
  if (spec.thickness.min < 2 || spec.thickness.max < spec.thickness.min) {
    throw std::invalid_argument("shelf thickness range must satisfy 2 <= min <= max");
  }
  if (spec.shelf_count.min < 0 || spec.shelf_count.max < spec.shelf_count.min) {
    throw std::invalid_argument("shelf count range must satisfy 0 <= min <= max");
  }
  const int n = std::uniform_int_distribution<int>(spec.shelf_count.min, spec.shelf_count.max)(rng);
  std::vector<std::size_t> thick(static_cast<std::size_t>(n));
  for (auto& t : thick) {
    t = static_cast<std::size_t>(
        std::uniform_int_distribution<int>(spec.thickness.min, spec.thickness.max)(rng));
  }
  const std::size_t used = std::accumulate(thick.begin(), thick.end(), std::size_t{0}) +
                           (static_cast<std::size_t>(n) + 1) * kMinGap;
  if (used > spec.height) {
    throw std::invalid_argument("infeasible synthetic spec: " + std::to_string(n) +
                                " shelves need " + std::to_string(used) + " rows, canvas has " +
                                std::to_string(spec.height));
  }
  // Spread the remaining rows over the n + 1 gaps.
  const std::size_t slack = spec.height - used;
  std::vector<double> weights(static_cast<std::size_t>(n) + 1);
  for (auto& w : weights) w = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<ShelfBand> bands;
  std::size_t y = 0;
  for (int i = 0; i < n; ++i) {
    y += kMinGap + static_cast<std::size_t>(std::floor(slack * weights[static_cast<std::size_t>(i)] / total));
    bands.push_back({y, thick[static_cast<std::size_t>(i)]});
    y += thick[static_cast<std::size_t>(i)];
  }
  return bands;
}

// Products standing on a shelf: rows [top, bottom), bottom-aligned boxes.
void paint_products(Painter& p, const SynthSpec& spec, std::size_t top, std::size_t bottom,
                    bool separator) {
  if (bottom <= top + 2) return;
  const std::size_t span = bottom - top;
  if (separator) {
    // Gap between two shelf units: dark back panel with vertical uprights.
    p.rect(top, 0, bottom, spec.width, static_cast<float>(p.uniform(0.12, 0.22)));
    const std::size_t step = static_cast<std::size_t>(p.uniform_int(40, 90));
    for (std::size_t x = static_cast<std::size_t>(p.uniform_int(0, 30)); x < spec.width; x += step) {
      p.rect(top, x, bottom, x + 4, static_cast<float>(p.uniform(0.45, 0.6)));
    }
    return;
  }
  const bool small = spec.regime == Regime::kDistant || spec.regime == Regime::kMixed;
  const int min_w = small ? 4 : 10, max_w = small ? 16 : 42;
  std::size_t x = static_cast<std::size_t>(p.uniform_int(0, 6));
  while (x < spec.width) {
    const auto w = static_cast<std::size_t>(p.uniform_int(min_w, max_w));
    if (p.uniform(0.0, 1.0) < spec.product_density) {
      const double frac = p.uniform(0.45, 0.95);
      const std::size_t h = std::max<std::size_t>(1, static_cast<std::size_t>(span * frac));
      const float fill = static_cast<float>(p.uniform(0.05, 0.68));
      p.rect(bottom - h, x, bottom, x + w, fill);
      // Label strip on larger boxes.
      if (w > 8 && h > 8) {
        const float label = std::clamp(fill + static_cast<float>(p.uniform(-0.25, 0.25)), 0.02f, 0.7f);
        const std::size_t ly = bottom - h + h / 3;
        p.rect(ly, x + 2, ly + h / 4 + 1, x + w - 2, label);
      }
    }
    x += w + static_cast<std::size_t>(p.uniform_int(0, 4));
  }
}

}  // namespace

SyntheticScene generate_scene(const SynthSpec& spec) {
  if (spec.height < 1 || spec.width < 1) throw std::invalid_argument("empty synthetic canvas");
  std::mt19937_64 rng(spec.seed);
  SyntheticScene scene;
  scene.bands = place_bands(spec, rng);

  Sample& s = scene.sample;
  s.source_id = "synth-" + std::string(regime_name(spec.regime)) + "-" + std::to_string(spec.seed);
  s.image = Raster(spec.height, spec.width);
  s.mask = BinaryMask(spec.height, spec.width);
  Painter p(s.image, rng);

  // Back wall with a vertical gradient.
  const double wall = p.uniform(0.28, 0.45);
  const double slope = p.uniform(-0.08, 0.08);
  for (std::size_t y = 0; y < spec.height; ++y) {
    const float v = static_cast<float>(wall + slope * (static_cast<double>(y) / spec.height - 0.5));
    for (std::size_t x = 0; x < spec.width; ++x) s.image.at(y, x) = v;
  }

  // Multi-block scenes split the shelf stack into two units.
  std::size_t separator_gap = static_cast<std::size_t>(-1);
  if (multi_block(spec.regime) && scene.bands.size() >= 2) {
    separator_gap = scene.bands.size() / 2;
  }
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i <= scene.bands.size(); ++i) {
    const std::size_t top = i < scene.bands.size() ? scene.bands[i].top : spec.height;
    paint_products(p, spec, prev_end, top, i == separator_gap);
    if (i < scene.bands.size()) prev_end = scene.bands[i].top + scene.bands[i].thickness;
  }

  for (const auto& band : scene.bands) {
    const double base = p.uniform(0.76, 0.9);
    for (std::size_t k = 0; k < band.thickness; ++k) {
      // Lip highlight on top, slightly darker underside.
      const double shade = base + 0.06 * (1.0 - static_cast<double>(k) / std::max<std::size_t>(1, band.thickness - 1)) - 0.03;
      const float v = static_cast<float>(std::clamp(shade, 0.7, 0.97));
      for (std::size_t x = 0; x < spec.width; ++x) {
        s.image.at(band.top + k, x) = v;
        s.mask.at(band.top + k, x) = 1;
      }
    }
    // Price tags on the shelf edge.
    if (band.thickness >= 5) {
      const std::size_t th = std::max<std::size_t>(2, band.thickness / 2);
      const std::size_t ty = band.top + (band.thickness - th) / 2;
      std::size_t x = static_cast<std::size_t>(p.uniform_int(5, 40));
      while (x + 10 < spec.width) {
        p.rect(ty, x, ty + th, x + static_cast<std::size_t>(p.uniform_int(6, 12)),
               static_cast<float>(p.uniform(0.93, 1.0)));
        x += static_cast<std::size_t>(p.uniform_int(30, 80));
      }
    }
  }

  if (spec.noise_amplitude > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_amplitude);
    for (auto& v : s.image.pixels) v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
  }
  return scene;
}

Sample generate_synthetic(const SynthSpec& spec) { return generate_scene(spec).sample; }

// ---------------------------------------------------------------------------
// Windowing

std::vector<std::size_t> window_origins(std::size_t extent, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw std::invalid_argument("window and stride must be >= 1");
  if (extent <= window) return {0};
  std::vector<std::size_t> out;
  for (std::size_t o = 0; o + window < extent; o += stride) out.push_back(o);
  if (out.back() != extent - window) out.push_back(extent - window);
  return out;
}

namespace {

// Mirror index without repeating the edge sample (period 2 * (n - 1)).
std::size_t reflect_index(std::size_t i, std::size_t n) {
  if (n == 1) return 0;
  const std::size_t period = 2 * (n - 1);
  i %= period;
  return i < n ? i : period - i;
}

template <typename Grid, typename Value>
Grid pad_grid(const Grid& src, const std::vector<Value>& data, std::size_t min_h, std::size_t min_w,
              std::vector<Value> Grid::*member) {
  const std::size_t h = std::max(src.height, min_h), w = std::max(src.width, min_w);
  Grid out(h, w);
  auto& dst = out.*member;
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t sy = reflect_index(y, src.height);
    for (std::size_t x = 0; x < w; ++x) dst[y * w + x] = data[sy * src.width + reflect_index(x, src.width)];
  }
  return out;
}

}  // namespace

Raster reflect_pad(const Raster& image, std::size_t min_h, std::size_t min_w) {
  return pad_grid(image, image.pixels, min_h, min_w, &Raster::pixels);
}

BinaryMask reflect_pad(const BinaryMask& mask, std::size_t min_h, std::size_t min_w) {
  return pad_grid(mask, mask.bits, min_h, min_w, &BinaryMask::bits);
}

std::vector<Sample> crop_windows(const Sample& sample, std::size_t window, std::size_t stride) {
  if (sample.image.height != sample.mask.height || sample.image.width != sample.mask.width) {
    throw std::invalid_argument("image and mask dimensions differ for " + sample.source_id);
  }
  if (sample.image.height == 0 || sample.image.width == 0) {
    throw std::invalid_argument("cannot crop an empty sample");
  }
  const Raster image = reflect_pad(sample.image, window, window);
  const BinaryMask mask = reflect_pad(sample.mask, window, window);
  std::vector<Sample> crops;
  for (std::size_t oy : window_origins(image.height, window, stride)) {
    for (std::size_t ox : window_origins(image.width, window, stride)) {
      Sample c;
      c.source_id = sample.source_id;
      c.crop_y = sample.crop_y + oy;
      c.crop_x = sample.crop_x + ox;
      c.image = Raster(window, window);
      c.mask = BinaryMask(window, window);
      for (std::size_t y = 0; y < window; ++y) {
        std::copy_n(image.pixels.begin() + static_cast<std::ptrdiff_t>((oy + y) * image.width + ox),
                    window, c.image.pixels.begin() + static_cast<std::ptrdiff_t>(y * window));
        std::copy_n(mask.bits.begin() + static_cast<std::ptrdiff_t>((oy + y) * mask.width + ox),
                    window, c.mask.bits.begin() + static_cast<std::ptrdiff_t>(y * window));
      }
      crops.push_back(std::move(c));
    }
  }
  return crops;
}

// ---------------------------------------------------------------------------
// Dataset directories

Raster to_grayscale(const Image8& image) {
  Raster out(image.height, image.width);
  const std::size_t n = image.width * image.height;
  for (std::size_t i = 0; i < n; ++i) {
    if (image.channels == 3) {
      const double luma = 0.299 * image.pixels[3 * i] + 0.587 * image.pixels[3 * i + 1] +
                          0.114 * image.pixels[3 * i + 2];
      out.pixels[i] = static_cast<float>(luma / 255.0);
    } else {
      out.pixels[i] = static_cast<float>(image.pixels[i] / 255.0);
    }
  }
  return out;
}

BinaryMask binarize(const Image8& image, int threshold) {
  const Raster gray = to_grayscale(image);
  BinaryMask out(image.height, image.width);
  for (std::size_t i = 0; i < out.bits.size(); ++i) {
    out.bits[i] = gray.pixels[i] * 255.0f >= static_cast<float>(threshold) - 1e-3f ? 1 : 0;
  }
  return out;
}

namespace {

struct PairPaths {
  std::filesystem::path image;
  std::filesystem::path mask;
};

// "<id>.img.png" -> ("<id>", "img")
bool split_name(const std::filesystem::path& file, std::string& id, std::string& kind) {
  const std::string ext = file.extension().string();
  if (ext != ".png" && ext != ".pgm" && ext != ".PNG" && ext != ".PGM") return false;
  const std::string stem = file.stem().string();
  const auto dot = stem.rfind('.');
  if (dot == std::string::npos) return false;
  kind = stem.substr(dot + 1);
  id = stem.substr(0, dot);
  return (kind == "img" || kind == "mask") && !id.empty();
}

}  // namespace

std::vector<Sample> load_dataset(const std::filesystem::path& dir, DatasetLoadReport* report) {
  if (!std::filesystem::is_directory(dir)) throw DatasetError("not a directory: " + dir.string());
  std::map<std::string, PairPaths> pairs;
  std::vector<std::string> unmatched;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string id, kind;
    if (!split_name(entry.path(), id, kind)) {
      unmatched.push_back(entry.path().filename().string());
      continue;
    }
    auto& slot = kind == "img" ? pairs[id].image : pairs[id].mask;
    if (!slot.empty()) throw DatasetError("duplicate " + kind + " for id " + id + " in " + dir.string());
    slot = entry.path();
  }
  std::vector<std::string> orphans;
  for (const auto& [id, p] : pairs) {
    if (p.mask.empty()) orphans.push_back(id);
    if (p.image.empty()) unmatched.push_back(p.mask.filename().string());
  }
  if (!orphans.empty()) {
    std::string list;
    for (const auto& id : orphans) list += (list.empty() ? "" : ", ") + id;
    throw DatasetError("missing mask for image id(s): " + list);
  }
  std::vector<Sample> samples;
  for (const auto& [id, p] : pairs) {
    if (p.image.empty()) continue;
    Sample s;
    s.source_id = id;
    try {
      s.image = to_grayscale(read_image(p.image));
      s.mask = binarize(read_image(p.mask));
    } catch (const ImageIoError& e) {
      throw DatasetError(e.what());
    }
    if (s.image.height != s.mask.height || s.image.width != s.mask.width) {
      throw DatasetError("image and mask sizes differ for id " + id);
    }
    samples.push_back(std::move(s));
  }
  std::sort(unmatched.begin(), unmatched.end());
  if (report) report->unmatched = std::move(unmatched);
  return samples;
}

std::vector<std::uint8_t> to_bytes(const Raster& image) {
  std::vector<std::uint8_t> out(image.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image.pixels[i], 0.0f, 1.0f) * 255.0f));
  }
  return out;
}

std::vector<std::uint8_t> to_bytes(const BinaryMask& mask) {
  std::vector<std::uint8_t> out(mask.bits.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask.bits[i] ? 255 : 0;
  return out;
}

void save_sample(const Sample& sample, const std::filesystem::path& dir, const std::string& id) {
  std::filesystem::create_directories(dir);
  write_gray_image(dir / (id + ".img.png"), sample.image.width, sample.image.height, to_bytes(sample.image));
  write_gray_image(dir / (id + ".mask.png"), sample.mask.width, sample.mask.height, to_bytes(sample.mask));
}

}  // namespace lwsnet

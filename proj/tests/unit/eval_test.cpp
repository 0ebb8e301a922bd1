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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "test_util.hpp"

namespace lwsnet {
namespace {

BinaryMask band_mask(std::size_t h, std::size_t w, std::size_t top, std::size_t thickness) {
  BinaryMask m(h, w);
  for (std::size_t y = top; y < top + thickness; ++y) {
    for (std::size_t x = 0; x < w; ++x) m.at(y, x) = 1;
  }
  return m;
}

BinaryMask flip(const BinaryMask& m) {
  BinaryMask f(m.height, m.width);
  for (std::size_t y = 0; y < m.height; ++y) {
    for (std::size_t x = 0; x < m.width; ++x) f.at(y, x) = m.at(y, m.width - 1 - x);
  }
  return f;
}

BinaryMask random_mask(std::mt19937_64& rng, std::size_t h, std::size_t w, double p) {
  std::bernoulli_distribution d(p);
  BinaryMask m(h, w);
  for (auto& b : m.bits) b = d(rng);
  return m;
}

TEST(IoU, Examples) {
  const auto a = band_mask(8, 8, 2, 3);
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, band_mask(8, 8, 6, 2)), 0.0);
  BinaryMask top(8, 8), full(8, 8, 1);
  for (std::size_t i = 0; i < 32; ++i) top.bits[i] = 1;
  EXPECT_EQ(iou(top, full), 0.5);
  EXPECT_EQ(iou(BinaryMask(4, 4), BinaryMask(4, 4)), 1.0);
  EXPECT_THROW(iou(BinaryMask(4, 4), BinaryMask(4, 5)), std::invalid_argument);
}

TEST(IoU, SymmetricFlipInvariantAndBounded) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_mask(rng, 9, 13, 0.3), b = random_mask(rng, 9, 13, 0.4);
    const double v = iou(a, b);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_EQ(v, iou(flip(a), flip(b)));
  }
}

TEST(Argmax, ChannelOneWinsAndTiesGoToBackground) {
  Tensor<float> l({2, 2, 3});
  for (std::size_t i = 0; i < 6; ++i) l[6 + i] = 1.0f;
  EXPECT_EQ(argmax_mask(l).count(), 6u);
  Tensor<float> tie({2, 2, 3}, 0.3f);
  EXPECT_EQ(argmax_mask(tie).count(), 0u);
}

TEST(PredictMask, StitchedPredictionEqualsPerTilePredictions) {
  const auto model = build_reference_model(11);
  std::mt19937_64 rng(12);
  Raster img(448, 448);
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  for (auto& v : img.pixels) v = d(rng);
  const auto logits = predict_logits(model, img);
  ASSERT_EQ(logits.shape(), (Shape{2, 448, 448}));
  for (std::size_t oy : {0u, 224u}) {
    for (std::size_t ox : {0u, 224u}) {
      Tensor<float> tile({1, 224, 224});
      for (std::size_t y = 0; y < 224; ++y) {
        for (std::size_t x = 0; x < 224; ++x) tile.at(0, y, x) = img.at(oy + y, ox + x);
      }
      const auto t = model.predict(tile);
      for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t y = 0; y < 224; ++y) {
          for (std::size_t x = 0; x < 224; ++x) {
            ASSERT_EQ(logits.at(c, oy + y, ox + x), t.at(c, y, x));
          }
        }
      }
    }
  }
}

TEST(PredictMask, SmallImageIsPaddedAndCroppedBack) {
  const auto model = build_reference_model(13);
  Raster img(100, 130, 0.4f);
  const auto m = predict_mask(model, img);
  EXPECT_EQ(m.height, 100u);
  EXPECT_EQ(m.width, 130u);
}

TEST(CompleteEdges, FullWidthBandUnchanged) {
  const auto band = band_mask(64, 80, 20, 6);
  EXPECT_EQ(complete_edges(band), band);
}

TEST(CompleteEdges, BridgesTenPixelGap) {
  auto m = band_mask(64, 80, 20, 6);
  for (std::size_t y = 20; y < 26; ++y) {
    for (std::size_t x = 30; x < 40; ++x) m.at(y, x) = 0;
  }
  const auto out = complete_edges(m);
  EXPECT_EQ(out, band_mask(64, 80, 20, 6));
  std::vector<std::uint32_t> labels;
  EXPECT_EQ(label_components(out, labels), 1u);
}

TEST(CompleteEdges, RemovesSmallBlob) {
  BinaryMask m(32, 32);
  for (std::size_t y = 10; y < 13; ++y) {
    for (std::size_t x = 10; x < 13; ++x) m.at(y, x) = 1;
  }
  EXPECT_EQ(complete_edges(m).count(), 0u);
}

TEST(CompleteEdges, ExtendsWideComponentToFullWidth) {
  // 70% wide band with a ragged edge: becomes full width, clamped to the median
  // thickness of 4 rows.
  BinaryMask m(40, 100);
  for (std::size_t x = 10; x < 80; ++x) {
    for (std::size_t y = 15; y < 19; ++y) m.at(y, x) = 1;
  }
  m.at(19, 40) = 1;
  const auto out = complete_edges(m);
  for (std::size_t x = 0; x < 100; ++x) {
    for (std::size_t y = 15; y < 19; ++y) EXPECT_EQ(out.at(y, x), 1) << y << "," << x;
    EXPECT_EQ(out.at(14, x), 0);
  }
  EXPECT_EQ(out.at(19, 40), 1);
  // A 50% wide component stays as is.
  BinaryMask narrow(40, 100);
  for (std::size_t x = 0; x < 50; ++x) {
    for (std::size_t y = 5; y < 9; ++y) narrow.at(y, x) = 1;
  }
  EXPECT_EQ(complete_edges(narrow), narrow);
}

TEST(CompleteEdges, SupersetOfInputMinusDroppedAndIdempotent) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 40; ++t) {
    const auto m = random_mask(rng, 48, 64, 0.08 + 0.01 * (t % 10));
    const auto once = complete_edges(m);
    EXPECT_EQ(complete_edges(once), once) << "trial " << t;
    std::vector<std::uint32_t> labels;
    const std::size_t n = label_components(m, labels);
    std::vector<std::size_t> area(n + 1, 0);
    for (auto l : labels) ++area[l];
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
      // Pixels of input components that reach 20 px survive.
      if (m.bits[i] && area[labels[i]] >= 20) EXPECT_EQ(once.bits[i], 1);
    }
  }
}

// Ground truth of full-width bands, input a subset made of horizontal
// segments of at least 20 px: completion never lowers IoU.
TEST(CompleteEdges, NeverLowersIoUAgainstBandTruth) {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 60; ++t) {
    const std::size_t h = 96, w = 128;
    BinaryMask gt(h, w), pred(h, w);
    std::size_t top = 4 + rng() % 6;
    while (top + 12 < h) {
      const std::size_t thick = 3 + rng() % 8;
      for (std::size_t y = top; y < top + thick; ++y) {
        for (std::size_t x = 0; x < w; ++x) gt.at(y, x) = 1;
        std::size_t x = rng() % 10;
        while (x + 20 <= w) {
          const std::size_t len = 20 + rng() % 40;
          for (std::size_t k = x; k < std::min(w, x + len); ++k) pred.at(y, k) = 1;
          x += len + rng() % 25;
        }
      }
      top += thick + 3 + rng() % 12;
    }
    const double before = iou(pred, gt);
    const double after = iou(complete_edges(pred), gt);
    EXPECT_GE(after, before) << "trial " << t;
  }
}

TEST(EvaluateSets, PerfectAndEmptyPredictors) {
  std::vector<NamedSet> sets;
  for (Regime r : kAllRegimes) {
    NamedSet s{std::string(regime_name(r)), {}};
    for (std::uint64_t i = 0; i < 3; ++i) {
      auto smp = generate_synthetic(SynthSpec::defaults(r, 100 + i, 64, 64));
      smp.source_id = "s" + std::to_string(i);
      s.samples.push_back(smp);
    }
    sets.push_back(s);
  }
  const auto perfect = evaluate_sets([](const Sample& s) { return s.mask; }, sets);
  ASSERT_EQ(perfect.sets.size(), 4u);
  for (const auto& s : perfect.sets) EXPECT_EQ(s.mean_raw(), 1.0);
  const auto empty = evaluate_sets([](const Sample& s) { return BinaryMask(s.mask.height, s.mask.width); }, sets);
  for (const auto& s : empty.sets) {
    EXPECT_EQ(s.mean_raw(), 0.0);
    EXPECT_EQ(s.mean_post(), 0.0);
  }
  std::ostringstream csv;
  write_iou_csv(csv, perfect, true);
  EXPECT_EQ(csv.str().rfind("set,sample_id,iou\nclose-up,s0,1.000000\n", 0), 0u);
  EXPECT_NE(csv.str().find("mixed,mean,1.000000\n"), std::string::npos);
}

}  // namespace
}  // namespace lwsnet

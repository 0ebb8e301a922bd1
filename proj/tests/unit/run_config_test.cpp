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

#include "run_config.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace lwsnet::cli {
namespace {

RunConfig parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  apply_config(in, "run.cfg", cfg);
  return cfg;
}

TEST(RunConfig, ParsesKeysCommentsAndBlankLines) {
  const auto cfg = parse(
      "# desk run\n"
      "epochs = 4\n"
      "\n"
      "batch_size=2   # trailing comment\n"
      "learning_rate = 5e-4\n"
      "optimizer = sgd-momentum\n"
      "augment_flip = false\n"
      "seed = 17\n"
      "positive_weight = 2.5\n"
      "crop_stride = 56\n");
  EXPECT_EQ(cfg.train.epochs, 4);
  EXPECT_EQ(cfg.train.batch_size, 2);
  EXPECT_DOUBLE_EQ(cfg.train.learning_rate, 5e-4);
  EXPECT_EQ(cfg.train.optimizer, OptimizerKind::kSgdMomentum);
  EXPECT_FALSE(cfg.train.augment_flip);
  EXPECT_EQ(cfg.train.seed, 17u);
  EXPECT_DOUBLE_EQ(cfg.train.positive_weight, 2.5);
  EXPECT_EQ(cfg.crop_stride, 56u);
}

TEST(RunConfig, DefaultsSurviveEmptyFile) {
  const auto cfg = parse("# nothing\n\n");
  EXPECT_EQ(cfg.train.epochs, TrainConfig{}.epochs);
  EXPECT_EQ(cfg.crop_stride, 112u);
}

TEST(RunConfig, UnknownKeyReportsLineNumber) {
  try {
    parse("epochs = 2\n# ok\nlearning_rat = 0.1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("run.cfg:3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("learning_rat"), std::string::npos);
  }
}

TEST(RunConfig, MalformedLinesAndValues) {
  EXPECT_THROW(parse("epochs\n"), ConfigError);
  EXPECT_THROW(parse("= 3\n"), ConfigError);
  EXPECT_THROW(parse("epochs =\n"), ConfigError);
  EXPECT_THROW(parse("epochs = 3x\n"), ConfigError);
  EXPECT_THROW(parse("augment_flip = maybe\n"), ConfigError);
  EXPECT_THROW(parse("optimizer = rmsprop\n"), ConfigError);
  EXPECT_THROW(parse("crop_stride = 0\n"), ConfigError);
}

TEST(RunConfig, LaterSetOverridesEarlier) {
  auto cfg = parse("epochs = 4\nepochs = 6\n");
  EXPECT_EQ(cfg.train.epochs, 6);
  cfg.set("epochs", "9");
  EXPECT_EQ(cfg.train.epochs, 9);
}

}  // namespace
}  // namespace lwsnet::cli

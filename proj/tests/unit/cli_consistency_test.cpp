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

// The IoU that `eval` reports for a pair equals the IoU of the mask that
// `predict` writes, scored by the library.

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "lwsnet/arch.hpp"
#include "lwsnet/data.hpp"
#include "lwsnet/eval.hpp"
#include "lwsnet/image_io.hpp"
#include "lwsnet/serialize.hpp"
#include "test_util.hpp"

namespace lwsnet {
namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(LWSNET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliConsistency, PredictThenEvalMatchesLibraryIoU) {
  testing::TempDir dir("cli");
  const auto set = dir.path() / "close-up";
  std::filesystem::create_directories(set);
  const auto s = generate_synthetic(SynthSpec::defaults(Regime::kCloseUp, 77));
  save_sample(s, set, "p0");
  // An untrained model predicts a nontrivial, imperfect mask.
  const auto model = build_reference_model(8);
  save_model(model, dir.path() / "m.lwsn");
  const auto m = (dir.path() / "m.lwsn").string();

  for (const bool post : {false, true}) {
    const auto mask_path = dir.path() / (post ? "post.png" : "raw.png");
    ASSERT_EQ(run("predict --model " + m + " --image " + (set / "p0.img.png").string() + " --out " +
                  mask_path.string() + (post ? " --postprocess" : "")),
              0);
    const auto report = dir.path() / "iou.csv";
    ASSERT_EQ(run("eval --model " + m + " --sets " + set.string() + " --report " + report.string() +
                  (post ? "" : " --raw")),
              0);
    std::ifstream in(report);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    ASSERT_EQ(row.rfind("close-up,p0,", 0), 0u) << row;
    const double reported = std::stod(row.substr(row.rfind(',') + 1));

    const auto written = binarize(read_image(mask_path));
    const auto loaded = load_dataset(set);
    const double lib = iou(written, loaded[0].mask);
    EXPECT_NEAR(reported, lib, 5e-7) << (post ? "post" : "raw");
    // And the mask file is exactly the library prediction.
    auto direct = predict_mask(model, loaded[0].image);
    if (post) direct = complete_edges(direct);
    EXPECT_EQ(written, direct);
  }
}

}  // namespace
}  // namespace lwsnet

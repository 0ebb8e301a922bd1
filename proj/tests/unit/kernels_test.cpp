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

#include "lwsnet/kernels.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "test_util.hpp"

namespace lwsnet {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;
using testing::to_dense;
using testing::to_vec;

TEST(Tensor, RejectsZeroExtentAndSizeMismatch) {
  EXPECT_THROW(Tensor<float>({2, 0, 3}), ShapeError);
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>(3)), ShapeError);
  Tensor<float> t({2, 3, 4}, 1.5f);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(to_string(t.shape()), "2x3x4");
}

TEST(Conv2d, IdentityKernelReproducesInput) {
  Tensor<float> x({1, 3, 3}, 1.0f);
  Tensor<float> w({1, 1, 1, 1}, 1.0f);
  Tensor<float> b({1}, 0.0f);
  EXPECT_EQ(kernels::conv2d(x, w, b, 1, 0), x);
}

TEST(Conv2d, ReceptiveFieldSums) {
  Tensor<float> x({1, 3, 3}, 1.0f);
  Tensor<float> w({1, 1, 3, 3}, 1.0f);
  Tensor<float> b({1}, 0.0f);
  const auto y = kernels::conv2d(x, w, b, 1, 1);
  EXPECT_FLOAT_EQ(y.at(0, 1, 1), 9.0f);
  EXPECT_FLOAT_EQ(y.at(0, 0, 0), 4.0f);
  EXPECT_FLOAT_EQ(y.at(0, 2, 2), 4.0f);
  EXPECT_FLOAT_EQ(y.at(0, 0, 1), 6.0f);
  EXPECT_FLOAT_EQ(y.at(0, 1, 2), 6.0f);
}

TEST(Conv2d, MatchesNestedLoopReference) {
  std::mt19937_64 rng(11);
  const auto x = random_tensor<float>(rng, {4, 8, 8});
  const auto w = random_tensor<float>(rng, {6, 4, 3, 3});
  const auto b = random_tensor<float>(rng, {6});
  const auto y = kernels::conv2d(x, w, b, 1, 1);
  const auto ref = oracle::conv2d(to_dense(x), to_vec(w), to_vec(b), 6, 3, 3, 1, 1);
  ASSERT_EQ(y.shape(), (Shape{6, 8, 8}));
  EXPECT_LT(max_abs_diff(y, ref.v), 1e-5);
}

TEST(Conv2d, StridedAndUnpadded) {
  std::mt19937_64 rng(12);
  const auto x = random_tensor<double>(rng, {3, 9, 7});
  const auto w = random_tensor<double>(rng, {2, 3, 5, 3});
  const auto y = kernels::conv2d(x, w, Tensor<double>(), 2, 0);
  const auto ref = oracle::conv2d(to_dense(x), to_vec(w), {}, 2, 5, 3, 2, 0);
  ASSERT_EQ(y.shape(), (Shape{2, 3, 3}));
  EXPECT_LT(max_abs_diff(y, ref.v), 1e-12);
}

TEST(Conv2d, ChannelMismatchNamesBothShapes) {
  Tensor<float> x({3, 4, 4});
  Tensor<float> w({2, 5, 3, 3});
  try {
    kernels::conv2d(x, w, Tensor<float>(), 1, 1);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("3x4x4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("2x5x3x3"), std::string::npos) << msg;
  }
}

TEST(Conv2d, KernelLargerThanPaddedInputRejected) {
  Tensor<float> x({1, 2, 2});
  Tensor<float> w({1, 1, 5, 5});
  EXPECT_THROW(kernels::conv2d(x, w, Tensor<float>(), 1, 1), ShapeError);
  EXPECT_THROW(kernels::conv2d(x, Tensor<float>({1, 1, 1, 1}), Tensor<float>(), 0, 0), ShapeError);
}

TEST(ConvTranspose2d, SinglePixelStampsKernel) {
  Tensor<float> x({1, 1, 1}, 1.0f);
  Tensor<float> w({1, 1, 2, 2}, std::vector<float>{1.0f, 2.0f, 3.0f, 4.0f});
  const auto y = kernels::conv_transpose2d(x, w, Tensor<float>({1}, 0.0f));
  ASSERT_EQ(y.shape(), (Shape{1, 2, 2}));
  EXPECT_EQ(to_vec(y), (std::vector<double>{1, 2, 3, 4}));
}

TEST(ConvTranspose2d, MatchesStampingReference) {
  std::mt19937_64 rng(13);
  const auto x = random_tensor<float>(rng, {3, 4, 4});
  const auto w = random_tensor<float>(rng, {3, 5, 2, 2});
  const auto b = random_tensor<float>(rng, {5});
  const auto y = kernels::conv_transpose2d(x, w, b);
  const auto ref = oracle::conv_transpose2x2(to_dense(x), to_vec(w), to_vec(b), 5);
  ASSERT_EQ(y.shape(), (Shape{5, 8, 8}));
  EXPECT_LT(max_abs_diff(y, ref.v), 1e-5);
}

// The transposed conv applied to y equals M^T y, where M is the matrix of the
// 2x2 stride-2 conv2d built column by column from unit inputs.
TEST(ConvTranspose2d, EqualsExplicitMatrixAdjoint) {
  std::mt19937_64 rng(14);
  const std::size_t c = 3, o = 2, h = 4, w = 4;
  const auto weight = random_tensor<double>(rng, {c, o, 2, 2});
  // conv2d weight with the same taps: W'[c][o][a][b] as an (out=c, in=o) kernel.
  const std::size_t in_size = o * 2 * h * 2 * w, out_size = c * h * w;
  std::vector<double> matrix(out_size * in_size);
  for (std::size_t col = 0; col < in_size; ++col) {
    oracle::Dense e(o, 2 * h, 2 * w);
    e.v[col] = 1.0;
    const auto y = oracle::conv2d(e, to_vec(weight), {}, c, 2, 2, 2, 0);
    for (std::size_t row = 0; row < out_size; ++row) matrix[row * in_size + col] = y.v[row];
  }
  const auto x = random_tensor<double>(rng, {c, h, w});
  const auto got = kernels::conv_transpose2d(x, weight, Tensor<double>());
  std::vector<double> expect(in_size, 0.0);
  for (std::size_t col = 0; col < in_size; ++col) {
    for (std::size_t row = 0; row < out_size; ++row) expect[col] += matrix[row * in_size + col] * x[row];
  }
  EXPECT_LT(max_abs_diff(got, expect), 1e-5);
}

TEST(ConvTranspose2d, RejectsNon2x2Kernel) {
  Tensor<float> x({1, 2, 2});
  EXPECT_THROW(kernels::conv_transpose2d(x, Tensor<float>({1, 1, 3, 3}), Tensor<float>()), ShapeError);
}

TEST(MaxPool, MaxOfWindow) {
  Tensor<float> x({1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  const auto r = kernels::maxpool2d(x, 2, 2, 0);
  ASSERT_EQ(r.out.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(r.out[0], 4.0f);
}

TEST(MaxPool, TiesRouteGradientToFirstElement) {
  Tensor<float> x({1, 4, 4}, 2.0f);
  const auto r = kernels::maxpool2d(x, 2, 2, 0);
  for (float v : r.out.data()) EXPECT_EQ(v, 2.0f);
  Tensor<float> g(x.shape());
  kernels::maxpool2d_backward(Tensor<float>(r.out.shape(), 1.0f), r.argmax, g);
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t xx = 0; xx < 4; ++xx) {
      EXPECT_EQ(g.at(0, y, xx), (y % 2 == 0 && xx % 2 == 0) ? 1.0f : 0.0f) << y << "," << xx;
    }
  }
}

TEST(MaxPool, Kernel3Stride1Pad1MatchesReferenceExactly) {
  std::mt19937_64 rng(15);
  const auto x = random_tensor<float>(rng, {1, 4, 4});
  const auto r = kernels::maxpool2d(x, 3, 1, 1);
  const auto ref = oracle::maxpool(to_dense(x), 3, 1, 1);
  EXPECT_EQ(max_abs_diff(r.out, ref.v), 0.0);
}

TEST(MaxPool, KernelLargerThanPaddedInputRejected) {
  EXPECT_THROW(kernels::maxpool2d(Tensor<float>({1, 2, 2}), 5, 1, 1), ShapeError);
}

TEST(GlobalAvgPool, Examples) {
  Tensor<float> x({2, 2, 2}, std::vector<float>{0, 2, 4, 6, 5, 5, 5, 5});
  const auto y = kernels::global_avg_pool(x);
  EXPECT_FLOAT_EQ(y[0], 3.0f);
  EXPECT_FLOAT_EQ(y[1], 5.0f);
}

TEST(GlobalAvgPool, MatchesSummation) {
  std::mt19937_64 rng(16);
  const auto x = random_tensor<float>(rng, {8, 5, 7});
  EXPECT_LT(max_abs_diff(kernels::global_avg_pool(x), oracle::global_avg_pool(to_dense(x))), 1e-6);
}

TEST(BatchNorm, GammaOneBetaZeroOnStandardizedInput) {
  // Channel with mean 0 and population variance 1.
  Tensor<double> x({1, 2, 2}, std::vector<double>{1, -1, 1, -1});
  Tensor<double> gamma({1}, 1.0), beta({1}, 0.0), rm({1}, 0.0), rv({1}, 1.0);
  kernels::BatchNormStats<double> stats;
  const auto y = kernels::batch_norm_train(x, gamma, beta, rm, rv, stats);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(y[i], x[i], 1e-5);
}

TEST(BatchNorm, ZeroGammaYieldsBeta) {
  std::mt19937_64 rng(17);
  const auto x = random_tensor<float>(rng, {3, 4, 4});
  Tensor<float> gamma({3}, 0.0f), beta({3}, std::vector<float>{0.5f, -1.0f, 2.0f});
  Tensor<float> rm({3}, 0.0f), rv({3}, 1.0f);
  kernels::BatchNormStats<float> stats;
  const auto y = kernels::batch_norm_train(x, gamma, beta, rm, rv, stats);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(y[c * 16 + i], beta[c]);
  }
}

TEST(BatchNorm, TrainOutputHasZeroMeanUnitVariance) {
  std::mt19937_64 rng(18);
  const auto x = random_tensor<float>(rng, {4, 8, 8}, 2.0, 7.0);
  Tensor<float> gamma({4}, 1.0f), beta({4}, 0.0f), rm({4}, 0.0f), rv({4}, 1.0f);
  kernels::BatchNormStats<float> stats;
  const auto y = kernels::batch_norm_train(x, gamma, beta, rm, rv, stats);
  const auto ref = oracle::batch_norm_train(to_dense(x), {1, 1, 1, 1}, {0, 0, 0, 0}, 1e-5);
  EXPECT_LT(max_abs_diff(y, ref.v), 1e-5);
  for (std::size_t c = 0; c < 4; ++c) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 64; ++i) m += y[c * 64 + i];
    m /= 64;
    for (std::size_t i = 0; i < 64; ++i) v += (y[c * 64 + i] - m) * (y[c * 64 + i] - m);
    v /= 64;
    EXPECT_NEAR(m, 0.0, 1e-4);
    // eps = 1e-5 shrinks the variance by var / (var + eps).
    EXPECT_NEAR(v, 1.0, 1e-4);
  }
}

TEST(BatchNorm, RunningStatsUseMomentumAndUnbiasedVariance) {
  Tensor<double> x({1, 1, 4}, std::vector<double>{1, 2, 3, 4});
  Tensor<double> gamma({1}, 1.0), beta({1}, 0.0), rm({1}, 0.0), rv({1}, 1.0);
  kernels::BatchNormStats<double> stats;
  kernels::batch_norm_train(x, gamma, beta, rm, rv, stats);
  EXPECT_NEAR(rm[0], 0.1 * 2.5, 1e-12);
  EXPECT_NEAR(rv[0], 0.9 * 1.0 + 0.1 * (5.0 / 3.0), 1e-12);
}

TEST(BatchNorm, EvalUsesRunningStats) {
  Tensor<double> x({1, 1, 2}, std::vector<double>{3, 5});
  Tensor<double> gamma({1}, 2.0), beta({1}, 1.0), rm({1}, 1.0), rv({1}, 4.0);
  const auto y = kernels::batch_norm_eval(x, gamma, beta, rm, rv);
  EXPECT_NEAR(y[0], 2.0 * (3 - 1) / std::sqrt(4 + 1e-5) + 1.0, 1e-12);
  EXPECT_NEAR(y[1], 2.0 * (5 - 1) / std::sqrt(4 + 1e-5) + 1.0, 1e-12);
}

TEST(Activations, SigmoidReluSoftmax) {
  Tensor<float> z({1}, 0.0f);
  EXPECT_FLOAT_EQ(kernels::sigmoid(z)[0], 0.5f);
  Tensor<float> big({2}, std::vector<float>{-1000.0f, 1000.0f});
  const auto s = kernels::sigmoid(big);
  EXPECT_EQ(s[0], 0.0f);
  EXPECT_EQ(s[1], 1.0f);
  Tensor<float> r({3}, std::vector<float>{-2.0f, 0.0f, 3.0f});
  EXPECT_EQ(to_vec(kernels::relu(r)), (std::vector<double>{0, 0, 3}));

  const auto sm = kernels::softmax_channelwise(Tensor<float>({2, 3, 3}, 0.7f));
  for (float v : sm.data()) EXPECT_FLOAT_EQ(v, 0.5f);
}

TEST(Activations, SoftmaxNonNegativeAndNormalized) {
  std::mt19937_64 rng(19);
  const auto x = random_tensor<float>(rng, {5, 6, 6}, -50.0, 50.0);
  const auto y = kernels::softmax_channelwise(x);
  for (std::size_t p = 0; p < 36; ++p) {
    double s = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      EXPECT_GE(y[c * 36 + p], 0.0f);
      s += y[c * 36 + p];
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Concat, ShapesChannelsAndSplitRoundTrip) {
  std::mt19937_64 rng(20);
  const auto a = random_tensor<float>(rng, {3, 4, 4});
  const auto b = random_tensor<float>(rng, {5, 4, 4});
  const std::array<const Tensor<float>*, 2> parts{&a, &b};
  const auto y = kernels::concat_channels<float>(parts);
  ASSERT_EQ(y.shape(), (Shape{8, 4, 4}));
  std::vector<float> first(y.data().begin(), y.data().begin() + 48);
  std::vector<float> second(y.data().begin() + 48, y.data().end());
  EXPECT_EQ(Tensor<float>({3, 4, 4}, first), a);
  EXPECT_EQ(Tensor<float>({5, 4, 4}, second), b);

  const auto c = random_tensor<float>(rng, {2, 4, 5});
  const std::array<const Tensor<float>*, 2> bad{&a, &c};
  EXPECT_THROW(kernels::concat_channels<float>(bad), ShapeError);
}

TEST(FullyConnected, IdentityZeroAndReference) {
  Tensor<float> x({3}, std::vector<float>{1, 2, 3});
  Tensor<float> eye({3, 3}, std::vector<float>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_EQ(kernels::fully_connected(x, eye, Tensor<float>({3}, 0.0f)), x);
  Tensor<float> b({2}, std::vector<float>{4, -5});
  EXPECT_EQ(kernels::fully_connected(x, Tensor<float>({2, 3}, 0.0f), b), b);

  std::mt19937_64 rng(21);
  const auto xr = random_tensor<float>(rng, {4});
  const auto w = random_tensor<float>(rng, {3, 4});
  const auto br = random_tensor<float>(rng, {3});
  const auto ref = oracle::affine(to_vec(xr), to_vec(w), to_vec(br));
  EXPECT_LT(max_abs_diff(kernels::fully_connected(xr, w, br), ref), 1e-6);
  EXPECT_THROW(kernels::fully_connected(xr, Tensor<float>({3, 5}), br), ShapeError);
}

TEST(Kernels, DeterministicAcrossCalls) {
  std::mt19937_64 rng(22);
  const auto x = random_tensor<float>(rng, {16, 32, 32});
  const auto w = random_tensor<float>(rng, {8, 16, 3, 3});
  EXPECT_EQ(kernels::conv2d(x, w, Tensor<float>(), 1, 1), kernels::conv2d(x, w, Tensor<float>(), 1, 1));
}

}  // namespace
}  // namespace lwsnet

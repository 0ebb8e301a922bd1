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

#include "lwsnet/autograd.hpp"

#include <gtest/gtest.h>

#include <array>
#include <functional>

#include "gradcheck.hpp"
#include "lwsnet/kernels.hpp"
#include "test_util.hpp"

namespace lwsnet {
namespace {

using testing::random_tensor;

TEST(Backward, LinearSumGivesInput) {
  std::mt19937_64 rng(1);
  Parameter<float> w{"w", "", random_tensor<float>(rng, {3, 4}), {}};
  const auto x = random_tensor<float>(rng, {3, 4});
  Tape<float> t;
  Var loss = ag::sum(t, ag::mul(t, t.parameter(w), t.constant(x)));
  t.backward(loss);
  EXPECT_EQ(w.grad, x);
}

TEST(Backward, RejectsNonScalarLoss) {
  Tape<float> t;
  Var x = t.input(Tensor<float>({2, 2}, 1.0f));
  EXPECT_THROW(t.backward(ag::relu(t, x)), std::invalid_argument);
}

TEST(Backward, RepeatedBackwardAccumulates) {
  Parameter<double> w{"w", "", Tensor<double>({2}, std::vector<double>{1, 2}), {}};
  for (int i = 0; i < 2; ++i) {
    Tape<double> t;
    Var x = t.parameter(w);
    t.backward(ag::sum(t, ag::mul(t, x, x)));
  }
  EXPECT_DOUBLE_EQ(w.grad[0], 4.0);
  EXPECT_DOUBLE_EQ(w.grad[1], 8.0);
  w.zero_grad();
  EXPECT_EQ(w.grad, Tensor<double>({2}));
}

TEST(Backward, SecondBackwardOnSameTapeRejected) {
  Tape<double> t;
  Var x = t.input(Tensor<double>({1}, 2.0));
  Var l = ag::sum(t, x);
  t.backward(l);
  EXPECT_THROW(t.backward(l), std::logic_error);
}

TEST(Backward, NonRecordingTapeComputesValues) {
  Tape<float> t(false);
  Var x = t.constant(Tensor<float>({3}, std::vector<float>{-1, 0, 2}));
  EXPECT_EQ(t.value(ag::relu(t, x)), (Tensor<float>({3}, std::vector<float>{0, 0, 2})));
}

// ---- per-operator finite-difference checks in 64-bit mode ----------------

using gradcheck::check_op;

TEST(GradCheck, Conv2dAllInputs) {
  std::mt19937_64 rng(2);
  for (std::size_t pad : {0u, 1u, 2u}) {
    for (std::size_t stride : {1u, 2u}) {
      std::vector<Tensor<double>> in{random_tensor<double>(rng, {3, 7, 6}),
                                     random_tensor<double>(rng, {4, 3, 3, 3}),
                                     random_tensor<double>(rng, {4})};
      check_op(in, [&](Tape<double>& t, std::span<const Var> v) {
        return ag::conv2d(t, v[0], v[1], v[2], stride, pad);
      }, 1e-3, 1e-5);
    }
  }
}

TEST(GradCheck, ConvTranspose2d) {
  std::mt19937_64 rng(3);
  std::vector<Tensor<double>> in{random_tensor<double>(rng, {3, 4, 4}),
                                 random_tensor<double>(rng, {3, 2, 2, 2}),
                                 random_tensor<double>(rng, {2})};
  check_op(in, [](Tape<double>& t, std::span<const Var> v) {
    return ag::conv_transpose2d(t, v[0], v[1], v[2]);
  }, 1e-3, 1e-5);
}

TEST(GradCheck, MaxPool) {
  std::mt19937_64 rng(4);
  // Distinct values spaced far beyond h keep every window's argmax stable.
  Tensor<double> x({2, 6, 6});
  std::vector<double> vals(x.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.1 * static_cast<double>(i);
  std::shuffle(vals.begin(), vals.end(), rng);
  for (std::size_t i = 0; i < vals.size(); ++i) x[i] = vals[i];
  for (auto [k, s, p] : {std::array<std::size_t, 3>{2, 2, 0}, std::array<std::size_t, 3>{3, 1, 1}}) {
    check_op({x}, [k, s, p](Tape<double>& t, std::span<const Var> v) {
      return ag::maxpool2d(t, v[0], k, s, p);
    }, 1e-4, 1e-5);
  }
}

TEST(GradCheck, GlobalAvgPoolAndFullyConnected) {
  std::mt19937_64 rng(5);
  check_op({random_tensor<double>(rng, {4, 5, 3})},
           [](Tape<double>& t, std::span<const Var> v) { return ag::global_avg_pool(t, v[0]); },
           1e-3, 1e-5);
  check_op({random_tensor<double>(rng, {6}), random_tensor<double>(rng, {3, 6}),
            random_tensor<double>(rng, {3})},
           [](Tape<double>& t, std::span<const Var> v) {
             return ag::fully_connected(t, v[0], v[1], v[2]);
           },
           1e-3, 1e-5);
}

TEST(GradCheck, BatchNormTrainAndEval) {
  std::mt19937_64 rng(6);
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    Tensor<double> rm = random_tensor<double>(rng, {3}, -0.5, 0.5);
    Tensor<double> rv = random_tensor<double>(rng, {3}, 0.5, 2.0);
    std::vector<Tensor<double>> in{random_tensor<double>(rng, {3, 4, 5}),
                                   random_tensor<double>(rng, {3}, 0.5, 1.5),
                                   random_tensor<double>(rng, {3})};
    check_op(in, [&](Tape<double>& t, std::span<const Var> v) {
      // Fresh copies so repeated evaluations see identical running stats.
      Tensor<double> m = rm, s = rv;
      return ag::batch_norm(t, v[0], v[1], v[2], m, s, mode);
    }, 1e-4, 1e-5);
  }
}

TEST(GradCheck, ReluAwayFromKink) {
  std::mt19937_64 rng(7);
  Tensor<double> x = random_tensor<double>(rng, {2, 4, 4}, 0.1, 1.0);
  for (std::size_t i = 0; i < x.size(); i += 2) x[i] = -x[i];
  check_op({x}, [](Tape<double>& t, std::span<const Var> v) { return ag::relu(t, v[0]); }, 1e-3,
           1e-5);
  // Gradient is exactly 1 on the positive side and 0 on the negative side.
  Tape<double> t;
  Var xv = t.input(x);
  t.backward(ag::sum(t, ag::relu(t, xv)));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(t.grad(xv)[i], x[i] > 0 ? 1.0 : 0.0);
}

TEST(GradCheck, SigmoidSoftmaxChannelScale) {
  std::mt19937_64 rng(8);
  check_op({random_tensor<double>(rng, {3, 3, 3}, -3, 3)},
           [](Tape<double>& t, std::span<const Var> v) { return ag::sigmoid(t, v[0]); }, 1e-3, 1e-5);
  check_op({random_tensor<double>(rng, {3, 3, 4}, -3, 3)},
           [](Tape<double>& t, std::span<const Var> v) { return ag::softmax_channelwise(t, v[0]); },
           1e-3, 1e-5);
  check_op({random_tensor<double>(rng, {3, 4, 4}), random_tensor<double>(rng, {3})},
           [](Tape<double>& t, std::span<const Var> v) { return ag::channel_scale(t, v[0], v[1]); },
           1e-3, 1e-5);
}

TEST(GradCheck, ConcatAddMul) {
  std::mt19937_64 rng(9);
  check_op({random_tensor<double>(rng, {2, 3, 3}), random_tensor<double>(rng, {3, 3, 3})},
           [](Tape<double>& t, std::span<const Var> v) { return ag::concat_channels(t, v); }, 1e-3,
           1e-5);
  check_op({random_tensor<double>(rng, {2, 3, 3}), random_tensor<double>(rng, {2, 3, 3})},
           [](Tape<double>& t, std::span<const Var> v) {
             return ag::add(t, ag::mul(t, v[0], v[1]), v[0]);
           },
           1e-3, 1e-5);
}

TEST(ConvAdjoint, InnerProductIdentity) {
  std::mt19937_64 rng(10);
  const auto w = random_tensor<double>(rng, {4, 3, 2, 2});
  const auto x = random_tensor<double>(rng, {3, 8, 8});
  const auto y = random_tensor<double>(rng, {4, 4, 4});
  const auto cx = kernels::conv2d(x, w, Tensor<double>(), 2, 0);
  const auto ty = kernels::conv_transpose2d(y, w, Tensor<double>());
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < cx.size(); ++i) lhs += cx[i] * y[i];
  for (std::size_t i = 0; i < ty.size(); ++i) rhs += x[i] * ty[i];
  EXPECT_NEAR(lhs, rhs, 1e-4);
}

// The input gradient of conv_transpose2d is conv2d of the upstream gradient.
TEST(ConvAdjoint, TransposeGradientIsConv) {
  std::mt19937_64 rng(11);
  const auto w = random_tensor<double>(rng, {3, 2, 2, 2});
  const auto x = random_tensor<double>(rng, {3, 4, 4});
  const auto g = random_tensor<double>(rng, {2, 8, 8});
  Tensor<double> gx(x.shape());
  kernels::conv_transpose2d_backward<double>(x, w, g, &gx, nullptr, nullptr);
  const auto expect = kernels::conv2d(g, w, Tensor<double>(), 2, 0);
  EXPECT_LT(testing::max_abs_diff(gx, testing::to_vec(expect)), 1e-12);
}

}  // namespace
}  // namespace lwsnet

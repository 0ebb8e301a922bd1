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

// Forward and backward compute kernels on plain tensors. These carry no
// autodiff state; autograd.hpp wraps them into recorded operations.
//
// Backward kernels accumulate (+=) into the gradient tensors they are given,
// which must already have the right shape. Passing nullptr skips that
// gradient.

#ifndef LWSNET_KERNELS_HPP_
#define LWSNET_KERNELS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "lwsnet/tensor.hpp"

namespace lwsnet::kernels {

/// Output extent of a strided window sweep with symmetric zero padding.
std::size_t window_output_extent(std::size_t in, std::size_t kernel,
                                 std::size_t stride, std::size_t padding);

// conv2d: x C x H x W, weight O x C x Kh x Kw, bias O (or empty for no bias).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding);
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight,
                     const Tensor<T>& grad_out, std::size_t stride,
                     std::size_t padding, Tensor<T>* grad_x, Tensor<T>* grad_weight,
                     Tensor<T>* grad_bias);

// 2x2 stride-2 transposed convolution: x C x H x W, weight C x O x 2 x 2.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight,
                           const Tensor<T>& bias);
template <typename T>
void conv_transpose2d_backward(const Tensor<T>& x, const Tensor<T>& weight,
                               const Tensor<T>& grad_out, Tensor<T>* grad_x,
                               Tensor<T>* grad_weight, Tensor<T>* grad_bias);

template <typename T>
struct PoolResult {
  Tensor<T> out;
  // Flat index into the input plane (h * W + w) of each output cell's max.
  std::vector<std::uint32_t> argmax;
};

/// Max pooling with -inf padding. Ties resolve to the first element in a
/// row-major scan of the window.
template <typename T>
PoolResult<T> maxpool2d(const Tensor<T>& x, std::size_t kernel, std::size_t stride,
                        std::size_t padding);
template <typename T>
void maxpool2d_backward(const Tensor<T>& grad_out,
                        std::span<const std::uint32_t> argmax, Tensor<T>& grad_x);

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);
template <typename T>
void global_avg_pool_backward(const Tensor<T>& grad_out, Tensor<T>& grad_x);

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

template <typename T>
struct BatchNormStats {
  std::vector<double> mean;
  std::vector<double> inv_std;
};

/// Normalizes each channel by its own statistics over H x W and updates the
/// running estimates (unbiased variance, momentum 0.1).
template <typename T>
Tensor<T> batch_norm_train(const Tensor<T>& x, const Tensor<T>& gamma,
                           const Tensor<T>& beta, Tensor<T>& running_mean,
                           Tensor<T>& running_var, BatchNormStats<T>& stats);
template <typename T>
void batch_norm_train_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                               const BatchNormStats<T>& stats,
                               const Tensor<T>& grad_out, Tensor<T>* grad_x,
                               Tensor<T>* grad_gamma, Tensor<T>* grad_beta);

template <typename T>
Tensor<T> batch_norm_eval(const Tensor<T>& x, const Tensor<T>& gamma,
                          const Tensor<T>& beta, const Tensor<T>& running_mean,
                          const Tensor<T>& running_var);
template <typename T>
void batch_norm_eval_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                              const Tensor<T>& running_mean,
                              const Tensor<T>& running_var, const Tensor<T>& grad_out,
                              Tensor<T>* grad_x, Tensor<T>* grad_gamma,
                              Tensor<T>* grad_beta);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

/// Softmax over axis 0 (channels), independently per spatial position.
template <typename T>
Tensor<T> softmax_channelwise(const Tensor<T>& x);

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>* const> parts);

/// y[c, ...] = x[c, ...] * gate[c]
template <typename T>
Tensor<T> channel_scale(const Tensor<T>& x, const Tensor<T>& gate);

// y = weight * x + bias; weight M x N.
template <typename T>
Tensor<T> fully_connected(const Tensor<T>& x, const Tensor<T>& weight,
                          const Tensor<T>& bias);
template <typename T>
void fully_connected_backward(const Tensor<T>& x, const Tensor<T>& weight,
                              const Tensor<T>& grad_out, Tensor<T>* grad_x,
                              Tensor<T>* grad_weight, Tensor<T>* grad_bias);

}  // namespace lwsnet::kernels

#endif  // LWSNET_KERNELS_HPP_

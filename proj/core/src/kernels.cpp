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

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "lwsnet/parallel.hpp"

namespace lwsnet::kernels {
namespace {

// Row-major C = alpha * op(A) * op(B) + beta * C.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          float alpha, const float* a, const float* b, float beta, float* c) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(trans_a ? m : k), b, static_cast<int>(trans_b ? k : n),
              beta, c, static_cast<int>(n));
}

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, const double* b, double beta, double* c) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(trans_a ? m : k), b, static_cast<int>(trans_b ? k : n),
              beta, c, static_cast<int>(n));
}

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) {
    throw ShapeError(std::string(what) + " must have rank " + std::to_string(rank) +
                     ", got " + to_string(shape));
  }
}

void require_same(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": shape " + to_string(a) + " vs " + to_string(b));
  }
}

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t out_channels, kh, kw;
  std::size_t out_h, out_w;
  std::size_t stride, padding;

  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && padding == 0; }
  std::size_t patch() const { return channels * kh * kw; }
  std::size_t out_plane() const { return out_h * out_w; }
};

template <typename T>
ConvGeometry conv_geometry(const Tensor<T>& x, const Tensor<T>& weight, std::size_t stride,
                           std::size_t padding) {
  require_rank(x.shape(), 3, "conv2d input");
  require_rank(weight.shape(), 4, "conv2d weight");
  if (stride < 1) throw ShapeError("conv2d stride must be >= 1");
  if (x.dim(0) != weight.dim(1)) {
    throw ShapeError("conv2d channel mismatch: input " + to_string(x.shape()) +
                     " vs weight " + to_string(weight.shape()));
  }
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), weight.dim(0), weight.dim(2), weight.dim(3),
                 0, 0, stride, padding};
  if (g.height + 2 * padding < g.kh || g.width + 2 * padding < g.kw) {
    throw ShapeError("conv2d kernel " + to_string(weight.shape()) +
                     " larger than padded input " + to_string(x.shape()));
  }
  g.out_h = window_output_extent(g.height, g.kh, stride, padding);
  g.out_w = window_output_extent(g.width, g.kw, stride, padding);
  return g;
}

// cols is (C*Kh*Kw) x (out_h*out_w).
template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* cols) {
  const std::size_t plane = g.out_plane();
  parallel_for(g.channels, 4, [&](std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
      const T* src = x + c * g.height * g.width;
      for (std::size_t ki = 0; ki < g.kh; ++ki) {
        for (std::size_t kj = 0; kj < g.kw; ++kj) {
          T* row = cols + ((c * g.kh + ki) * g.kw + kj) * plane;
          for (std::size_t oh = 0; oh < g.out_h; ++oh) {
            T* dst = row + oh * g.out_w;
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + ki) -
                                      static_cast<std::ptrdiff_t>(g.padding);
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.height)) {
              std::fill(dst, dst + g.out_w, T{0});
              continue;
            }
            const T* line = src + static_cast<std::size_t>(ih) * g.width;
            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kj) -
                                       static_cast<std::ptrdiff_t>(g.padding);
            if (g.stride == 1) {
              // Valid ow range: 0 <= ow + off < width.
              std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -off);
              std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
                  static_cast<std::ptrdiff_t>(g.out_w),
                  static_cast<std::ptrdiff_t>(g.width) - off);
              hi = std::max(hi, lo);
              std::fill(dst, dst + lo, T{0});
              std::memcpy(dst + lo, line + lo + off, static_cast<std::size_t>(hi - lo) * sizeof(T));
              std::fill(dst + hi, dst + g.out_w, T{0});
            } else {
              for (std::size_t ow = 0; ow < g.out_w; ++ow) {
                const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride) + off;
                dst[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.width))
                              ? T{0}
                              : line[iw];
              }
            }
          }
        }
      }
    }
  });
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* x) {
  const std::size_t plane = g.out_plane();
  parallel_for(g.channels, 4, [&](std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
      T* dst = x + c * g.height * g.width;
      for (std::size_t ki = 0; ki < g.kh; ++ki) {
        for (std::size_t kj = 0; kj < g.kw; ++kj) {
          const T* row = cols + ((c * g.kh + ki) * g.kw + kj) * plane;
          for (std::size_t oh = 0; oh < g.out_h; ++oh) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + ki) -
                                      static_cast<std::ptrdiff_t>(g.padding);
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.height)) continue;
            T* line = dst + static_cast<std::size_t>(ih) * g.width;
            const T* src = row + oh * g.out_w;
            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kj) -
                                       static_cast<std::ptrdiff_t>(g.padding);
            for (std::size_t ow = 0; ow < g.out_w; ++ow) {
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride) + off;
              if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.width)) line[iw] += src[ow];
            }
          }
        }
      }
    }
  });
}

template <typename T>
void add_bias_rows(T* out, std::size_t rows, std::size_t cols, const Tensor<T>& bias) {
  if (bias.empty()) return;
  for (std::size_t r = 0; r < rows; ++r) {
    T* line = out + r * cols;
    const T b = bias[r];
    for (std::size_t i = 0; i < cols; ++i) line[i] += b;
  }
}

template <typename T>
void accumulate_row_sums(const T* in, std::size_t rows, std::size_t cols, T* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* line = in + r * cols;
    double acc = 0.0;
    for (std::size_t i = 0; i < cols; ++i) acc += line[i];
    out[r] += static_cast<T>(acc);
  }
}

void check_bias(const Shape& bias, std::size_t channels, const char* what) {
  if (bias.empty()) return;
  if (bias.size() != 1 || bias[0] != channels) {
    throw ShapeError(std::string(what) + " bias " + to_string(bias) + " does not match " +
                     std::to_string(channels) + " output channels");
  }
}

}  // namespace

std::size_t window_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                 std::size_t padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding) {
  const ConvGeometry g = conv_geometry(x, weight, stride, padding);
  check_bias(bias.shape(), g.out_channels, "conv2d");
  Tensor<T> out({g.out_channels, g.out_h, g.out_w});
  if (g.pointwise()) {
    gemm(false, false, g.out_channels, g.out_plane(), g.channels, T{1}, weight.raw(), x.raw(),
         T{0}, out.raw());
  } else {
    std::vector<T> cols(g.patch() * g.out_plane());
    im2col(x.raw(), g, cols.data());
    gemm(false, false, g.out_channels, g.out_plane(), g.patch(), T{1}, weight.raw(),
         cols.data(), T{0}, out.raw());
  }
  add_bias_rows(out.raw(), g.out_channels, g.out_plane(), bias);
  return out;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& grad_out,
                     std::size_t stride, std::size_t padding, Tensor<T>* grad_x,
                     Tensor<T>* grad_weight, Tensor<T>* grad_bias) {
  const ConvGeometry g = conv_geometry(x, weight, stride, padding);
  require_same(grad_out.shape(), Shape{g.out_channels, g.out_h, g.out_w}, "conv2d grad");
  if (grad_bias) accumulate_row_sums(grad_out.raw(), g.out_channels, g.out_plane(), grad_bias->raw());
  if (g.pointwise()) {
    if (grad_weight) {
      gemm(false, true, g.out_channels, g.channels, g.out_plane(), T{1}, grad_out.raw(),
           x.raw(), T{1}, grad_weight->raw());
    }
    if (grad_x) {
      gemm(true, false, g.channels, g.out_plane(), g.out_channels, T{1}, weight.raw(),
           grad_out.raw(), T{1}, grad_x->raw());
    }
    return;
  }
  std::vector<T> cols(g.patch() * g.out_plane());
  if (grad_weight) {
    im2col(x.raw(), g, cols.data());
    gemm(false, true, g.out_channels, g.patch(), g.out_plane(), T{1}, grad_out.raw(),
         cols.data(), T{1}, grad_weight->raw());
  }
  if (grad_x) {
    gemm(true, false, g.patch(), g.out_plane(), g.out_channels, T{1}, weight.raw(),
         grad_out.raw(), T{0}, cols.data());
    col2im_add(cols.data(), g, grad_x->raw());
  }
}

namespace {

template <typename T>
void check_transpose(const Tensor<T>& x, const Tensor<T>& weight) {
  require_rank(x.shape(), 3, "conv_transpose2d input");
  require_rank(weight.shape(), 4, "conv_transpose2d weight");
  if (weight.dim(2) != 2 || weight.dim(3) != 2) {
    throw ShapeError("conv_transpose2d supports only 2x2 stride-2 kernels, got weight " +
                     to_string(weight.shape()));
  }
  if (weight.dim(0) != x.dim(0)) {
    throw ShapeError("conv_transpose2d channel mismatch: input " + to_string(x.shape()) +
                     " vs weight " + to_string(weight.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  check_transpose(x, weight);
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2), o = weight.dim(1);
  check_bias(bias.shape(), o, "conv_transpose2d");
  const std::size_t hw = h * w;
  // taps[(o*4 + a*2 + b), i*w + j] = sum_c weight[c, o, a, b] * x[c, i, j]
  std::vector<T> taps(o * 4 * hw);
  gemm(true, false, o * 4, hw, c, T{1}, weight.raw(), x.raw(), T{0}, taps.data());
  Tensor<T> out({o, 2 * h, 2 * w});
  parallel_for(o, 4, [&](std::size_t o0, std::size_t o1) {
    for (std::size_t oc = o0; oc < o1; ++oc) {
      const T b = bias.empty() ? T{0} : bias[oc];
      T* plane = out.raw() + oc * 4 * hw;
      for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t bb = 0; bb < 2; ++bb) {
          const T* src = taps.data() + (oc * 4 + a * 2 + bb) * hw;
          for (std::size_t i = 0; i < h; ++i) {
            T* line = plane + (2 * i + a) * 2 * w + bb;
            const T* s = src + i * w;
            for (std::size_t j = 0; j < w; ++j) line[2 * j] = s[j] + b;
          }
        }
      }
    }
  });
  return out;
}

template <typename T>
void conv_transpose2d_backward(const Tensor<T>& x, const Tensor<T>& weight,
                               const Tensor<T>& grad_out, Tensor<T>* grad_x,
                               Tensor<T>* grad_weight, Tensor<T>* grad_bias) {
  check_transpose(x, weight);
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2), o = weight.dim(1);
  require_same(grad_out.shape(), Shape{o, 2 * h, 2 * w}, "conv_transpose2d grad");
  const std::size_t hw = h * w;
  if (grad_bias) accumulate_row_sums(grad_out.raw(), o, 4 * hw, grad_bias->raw());
  std::vector<T> gathered(o * 4 * hw);
  for (std::size_t oc = 0; oc < o; ++oc) {
    const T* plane = grad_out.raw() + oc * 4 * hw;
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t bb = 0; bb < 2; ++bb) {
        T* dst = gathered.data() + (oc * 4 + a * 2 + bb) * hw;
        for (std::size_t i = 0; i < h; ++i) {
          const T* line = plane + (2 * i + a) * 2 * w + bb;
          T* d = dst + i * w;
          for (std::size_t j = 0; j < w; ++j) d[j] = line[2 * j];
        }
      }
    }
  }
  if (grad_x) {
    gemm(false, false, c, hw, o * 4, T{1}, weight.raw(), gathered.data(), T{1}, grad_x->raw());
  }
  if (grad_weight) {
    gemm(false, true, c, o * 4, hw, T{1}, x.raw(), gathered.data(), T{1}, grad_weight->raw());
  }
}

template <typename T>
PoolResult<T> maxpool2d(const Tensor<T>& x, std::size_t kernel, std::size_t stride,
                        std::size_t padding) {
  require_rank(x.shape(), 3, "maxpool2d input");
  if (stride < 1 || kernel < 1) throw ShapeError("maxpool2d kernel and stride must be >= 1");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h + 2 * padding < kernel || w + 2 * padding < kernel) {
    throw ShapeError("maxpool2d kernel " + std::to_string(kernel) +
                     " larger than padded input " + to_string(x.shape()));
  }
  if (padding >= kernel) throw ShapeError("maxpool2d padding must be smaller than the kernel");
  const std::size_t oh = window_output_extent(h, kernel, stride, padding);
  const std::size_t ow = window_output_extent(w, kernel, stride, padding);
  PoolResult<T> r{Tensor<T>({c, oh, ow}), std::vector<std::uint32_t>(c * oh * ow)};
  parallel_for(c, 4, [&](std::size_t c0, std::size_t c1) {
    for (std::size_t ch = c0; ch < c1; ++ch) {
      const T* src = x.raw() + ch * h * w;
      T* dst = r.out.raw() + ch * oh * ow;
      std::uint32_t* arg = r.argmax.data() + ch * oh * ow;
      for (std::size_t i = 0; i < oh; ++i) {
        const std::ptrdiff_t h0 = static_cast<std::ptrdiff_t>(i * stride) -
                                  static_cast<std::ptrdiff_t>(padding);
        const std::size_t hs = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, h0));
        const std::size_t he = static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(h), h0 + static_cast<std::ptrdiff_t>(kernel)));
        for (std::size_t j = 0; j < ow; ++j) {
          const std::ptrdiff_t w0 = static_cast<std::ptrdiff_t>(j * stride) -
                                    static_cast<std::ptrdiff_t>(padding);
          const std::size_t ws = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, w0));
          const std::size_t we = static_cast<std::size_t>(
              std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w), w0 + static_cast<std::ptrdiff_t>(kernel)));
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_idx = hs * w + ws;
          for (std::size_t y = hs; y < he; ++y) {
            for (std::size_t xx = ws; xx < we; ++xx) {
              const T v = src[y * w + xx];
              if (v > best) {
                best = v;
                best_idx = y * w + xx;
              }
            }
          }
          dst[i * ow + j] = best;
          arg[i * ow + j] = static_cast<std::uint32_t>(best_idx);
        }
      }
    }
  });
  return r;
}

template <typename T>
void maxpool2d_backward(const Tensor<T>& grad_out, std::span<const std::uint32_t> argmax,
                        Tensor<T>& grad_x) {
  const std::size_t c = grad_out.dim(0);
  const std::size_t out_plane = grad_out.dim(1) * grad_out.dim(2);
  const std::size_t in_plane = grad_x.dim(1) * grad_x.dim(2);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T* g = grad_out.raw() + ch * out_plane;
    const std::uint32_t* a = argmax.data() + ch * out_plane;
    T* dst = grad_x.raw() + ch * in_plane;
    for (std::size_t i = 0; i < out_plane; ++i) dst[a[i]] += g[i];
  }
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_rank(x.shape(), 3, "global_avg_pool input");
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  Tensor<T> out({c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T* src = x.raw() + ch * plane;
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += src[i];
    out[ch] = static_cast<T>(acc / static_cast<double>(plane));
  }
  return out;
}

template <typename T>
void global_avg_pool_backward(const Tensor<T>& grad_out, Tensor<T>& grad_x) {
  const std::size_t c = grad_x.dim(0), plane = grad_x.dim(1) * grad_x.dim(2);
  const T inv = T{1} / static_cast<T>(plane);
  for (std::size_t ch = 0; ch < c; ++ch) {
    T* dst = grad_x.raw() + ch * plane;
    const T g = grad_out[ch] * inv;
    for (std::size_t i = 0; i < plane; ++i) dst[i] += g;
  }
}

namespace {

template <typename T>
void check_bn(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta) {
  require_rank(x.shape(), 3, "batch_norm input");
  const Shape expected{x.dim(0)};
  require_same(gamma.shape(), expected, "batch_norm gamma");
  require_same(beta.shape(), expected, "batch_norm beta");
}

}  // namespace

template <typename T>
Tensor<T> batch_norm_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                           Tensor<T>& running_mean, Tensor<T>& running_var,
                           BatchNormStats<T>& stats) {
  check_bn(x, gamma, beta);
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  stats.mean.assign(c, 0.0);
  stats.inv_std.assign(c, 0.0);
  Tensor<T> out(x.shape());
  parallel_for(c, 4, [&](std::size_t c0, std::size_t c1) {
    for (std::size_t ch = c0; ch < c1; ++ch) {
      const T* src = x.raw() + ch * plane;
      double sum = 0.0;
      for (std::size_t i = 0; i < plane; ++i) sum += src[i];
      const double mean = sum / static_cast<double>(plane);
      double sq = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = src[i] - mean;
        sq += d * d;
      }
      const double var = sq / static_cast<double>(plane);
      const double inv_std = 1.0 / std::sqrt(var + kBatchNormEps);
      stats.mean[ch] = mean;
      stats.inv_std[ch] = inv_std;
      const double scale = gamma[ch] * inv_std;
      const double shift = beta[ch] - mean * scale;
      T* dst = out.raw() + ch * plane;
      const T s = static_cast<T>(scale), b = static_cast<T>(shift);
      for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * s + b;
      const double unbiased = plane > 1 ? var * plane / (plane - 1.0) : var;
      running_mean[ch] = static_cast<T>((1.0 - kBatchNormMomentum) * running_mean[ch] +
                                        kBatchNormMomentum * mean);
      running_var[ch] = static_cast<T>((1.0 - kBatchNormMomentum) * running_var[ch] +
                                       kBatchNormMomentum * unbiased);
    }
  });
  return out;
}

template <typename T>
void batch_norm_train_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                               const BatchNormStats<T>& stats, const Tensor<T>& grad_out,
                               Tensor<T>* grad_x, Tensor<T>* grad_gamma, Tensor<T>* grad_beta) {
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  const double n = static_cast<double>(plane);
  parallel_for(c, 4, [&](std::size_t c0, std::size_t c1) {
    for (std::size_t ch = c0; ch < c1; ++ch) {
      const T* src = x.raw() + ch * plane;
      const T* g = grad_out.raw() + ch * plane;
      const double mean = stats.mean[ch], inv_std = stats.inv_std[ch];
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * ((src[i] - mean) * inv_std);
      }
      if (grad_gamma) (*grad_gamma)[ch] += static_cast<T>(sum_gx);
      if (grad_beta) (*grad_beta)[ch] += static_cast<T>(sum_g);
      if (grad_x) {
        T* dst = grad_x->raw() + ch * plane;
        const double k = gamma[ch] * inv_std / n;
        const double mean_g = sum_g, mean_gx = sum_gx;
        for (std::size_t i = 0; i < plane; ++i) {
          const double xhat = (src[i] - mean) * inv_std;
          dst[i] += static_cast<T>(k * (n * g[i] - mean_g - xhat * mean_gx));
        }
      }
    }
  });
}

template <typename T>
Tensor<T> batch_norm_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                          const Tensor<T>& running_mean, const Tensor<T>& running_var) {
  check_bn(x, gamma, beta);
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  Tensor<T> out(x.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double inv_std = 1.0 / std::sqrt(static_cast<double>(running_var[ch]) + kBatchNormEps);
    const double scale = gamma[ch] * inv_std;
    const T s = static_cast<T>(scale);
    const T b = static_cast<T>(beta[ch] - running_mean[ch] * scale);
    const T* src = x.raw() + ch * plane;
    T* dst = out.raw() + ch * plane;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * s + b;
  }
  return out;
}

template <typename T>
void batch_norm_eval_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                              const Tensor<T>& running_mean, const Tensor<T>& running_var,
                              const Tensor<T>& grad_out, Tensor<T>* grad_x,
                              Tensor<T>* grad_gamma, Tensor<T>* grad_beta) {
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double inv_std = 1.0 / std::sqrt(static_cast<double>(running_var[ch]) + kBatchNormEps);
    const T* src = x.raw() + ch * plane;
    const T* g = grad_out.raw() + ch * plane;
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      sum_g += g[i];
      sum_gx += g[i] * (src[i] - running_mean[ch]) * inv_std;
    }
    if (grad_gamma) (*grad_gamma)[ch] += static_cast<T>(sum_gx);
    if (grad_beta) (*grad_beta)[ch] += static_cast<T>(sum_g);
    if (grad_x) {
      const T s = static_cast<T>(gamma[ch] * inv_std);
      T* dst = grad_x->raw() + ch * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] += g[i] * s;
    }
  }
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  const T* src = x.raw();
  T* dst = out.raw();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = src[i] > T{0} ? src[i] : T{0};
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = x[i];
    if (v >= T{0}) {
      out[i] = T{1} / (T{1} + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T{1} + e);
    }
  }
  return out;
}

template <typename T>
Tensor<T> softmax_channelwise(const Tensor<T>& x) {
  if (x.rank() < 1) throw ShapeError("softmax_channelwise needs a channel axis");
  const std::size_t c = x.dim(0), plane = x.size() / c;
  Tensor<T> out(x.shape());
  for (std::size_t p = 0; p < plane; ++p) {
    T m = x[p];
    for (std::size_t ch = 1; ch < c; ++ch) m = std::max(m, x[ch * plane + p]);
    double sum = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T e = std::exp(x[ch * plane + p] - m);
      out[ch * plane + p] = e;
      sum += e;
    }
    const T inv = static_cast<T>(1.0 / sum);
    for (std::size_t ch = 0; ch < c; ++ch) out[ch * plane + p] *= inv;
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>* const> parts) {
  if (parts.empty()) throw ShapeError("concat_channels needs at least one input");
  const Tensor<T>& first = *parts.front();
  require_rank(first.shape(), 3, "concat_channels input");
  std::size_t channels = 0;
  for (const Tensor<T>* p : parts) {
    require_rank(p->shape(), 3, "concat_channels input");
    if (p->dim(1) != first.dim(1) || p->dim(2) != first.dim(2)) {
      throw ShapeError("concat_channels spatial mismatch: " + to_string(first.shape()) +
                       " vs " + to_string(p->shape()));
    }
    channels += p->dim(0);
  }
  Tensor<T> out({channels, first.dim(1), first.dim(2)});
  T* dst = out.raw();
  for (const Tensor<T>* p : parts) {
    std::memcpy(dst, p->raw(), p->size() * sizeof(T));
    dst += p->size();
  }
  return out;
}

template <typename T>
Tensor<T> channel_scale(const Tensor<T>& x, const Tensor<T>& gate) {
  require_rank(x.shape(), 3, "channel_scale input");
  require_same(gate.shape(), Shape{x.dim(0)}, "channel_scale gate");
  const std::size_t plane = x.dim(1) * x.dim(2);
  Tensor<T> out(x.shape());
  for (std::size_t ch = 0; ch < x.dim(0); ++ch) {
    const T g = gate[ch];
    const T* src = x.raw() + ch * plane;
    T* dst = out.raw() + ch * plane;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * g;
  }
  return out;
}

template <typename T>
Tensor<T> fully_connected(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank(x.shape(), 1, "fully_connected input");
  require_rank(weight.shape(), 2, "fully_connected weight");
  if (weight.dim(1) != x.dim(0)) {
    throw ShapeError("fully_connected dimension mismatch: input " + to_string(x.shape()) +
                     " vs weight " + to_string(weight.shape()));
  }
  const std::size_t m = weight.dim(0), n = weight.dim(1);
  check_bias(bias.shape(), m, "fully_connected");
  Tensor<T> out({m});
  for (std::size_t r = 0; r < m; ++r) {
    double acc = bias.empty() ? 0.0 : bias[r];
    const T* row = weight.raw() + r * n;
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(row[i]) * x[i];
    out[r] = static_cast<T>(acc);
  }
  return out;
}

template <typename T>
void fully_connected_backward(const Tensor<T>& x, const Tensor<T>& weight,
                              const Tensor<T>& grad_out, Tensor<T>* grad_x,
                              Tensor<T>* grad_weight, Tensor<T>* grad_bias) {
  const std::size_t m = weight.dim(0), n = weight.dim(1);
  for (std::size_t r = 0; r < m; ++r) {
    const T g = grad_out[r];
    if (grad_bias) (*grad_bias)[r] += g;
    const T* row = weight.raw() + r * n;
    if (grad_weight) {
      T* gw = grad_weight->raw() + r * n;
      for (std::size_t i = 0; i < n; ++i) gw[i] += g * x[i];
    }
    if (grad_x) {
      for (std::size_t i = 0; i < n; ++i) (*grad_x)[i] += g * row[i];
    }
  }
}

#define LWSNET_INSTANTIATE_KERNELS(T)                                                         \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                            std::size_t, std::size_t);                                       \
  template void conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                std::size_t, std::size_t, Tensor<T>*, Tensor<T>*,            \
                                Tensor<T>*);                                                 \
  template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template void conv_transpose2d_backward(const Tensor<T>&, const Tensor<T>&,                \
                                          const Tensor<T>&, Tensor<T>*, Tensor<T>*,          \
                                          Tensor<T>*);                                       \
  template PoolResult<T> maxpool2d(const Tensor<T>&, std::size_t, std::size_t, std::size_t); \
  template void maxpool2d_backward(const Tensor<T>&, std::span<const std::uint32_t>,         \
                                   Tensor<T>&);                                              \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                      \
  template void global_avg_pool_backward(const Tensor<T>&, Tensor<T>&);                     \
  template Tensor<T> batch_norm_train(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                      Tensor<T>&, Tensor<T>&, BatchNormStats<T>&);           \
  template void batch_norm_train_backward(const Tensor<T>&, const Tensor<T>&,                \
                                          const BatchNormStats<T>&, const Tensor<T>&,        \
                                          Tensor<T>*, Tensor<T>*, Tensor<T>*);               \
  template Tensor<T> batch_norm_eval(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                     const Tensor<T>&, const Tensor<T>&);                    \
  template void batch_norm_eval_backward(const Tensor<T>&, const Tensor<T>&,                 \
                                         const Tensor<T>&, const Tensor<T>&,                 \
                                         const Tensor<T>&, Tensor<T>*, Tensor<T>*,           \
                                         Tensor<T>*);                                        \
  template Tensor<T> relu(const Tensor<T>&);                                                 \
  template Tensor<T> sigmoid(const Tensor<T>&);                                              \
  template Tensor<T> softmax_channelwise(const Tensor<T>&);                                  \
  template Tensor<T> concat_channels(std::span<const Tensor<T>* const>);                     \
  template Tensor<T> channel_scale(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> fully_connected(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);  \
  template void fully_connected_backward(const Tensor<T>&, const Tensor<T>&,                 \
                                         const Tensor<T>&, Tensor<T>*, Tensor<T>*,           \
                                         Tensor<T>*);

LWSNET_INSTANTIATE_KERNELS(float)
LWSNET_INSTANTIATE_KERNELS(double)

#undef LWSNET_INSTANTIATE_KERNELS

}  // namespace lwsnet::kernels

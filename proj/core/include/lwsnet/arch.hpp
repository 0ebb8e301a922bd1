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

// LWSNet layer graph: a four-level U-Net whose convolution stages are
// Inception blocks, with a squeeze-and-excitation gate after every encoder
// block. Layer names follow the published architecture table:
//
//   Input image, Inception-1, SE-1, MaxPool-1, ..., Inception-5,
//   Deconv-1, Inception-6, ..., Deconv-4, Inception-9, Final-conv
//
// Every trainable tensor records the table row it is counted under, which is
// what audit_params() sums.

#ifndef LWSNET_ARCH_HPP_
#define LWSNET_ARCH_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lwsnet/autograd.hpp"
#include "lwsnet/tensor.hpp"

namespace lwsnet {

/// Branch layout of one Inception block:
///   b1: 1x1 conv
///   b2: 1x1 reduce -> 3x3 conv
///   b3: 1x1 reduce -> 5x5 conv
///   b4: 3x3 max pool (stride 1) -> 1x1 conv
/// Branch outputs are concatenated in that order.
struct InceptionConfig {
  int out_channels = 0;
  int b1_width = 0;
  int b2_reduce = 0;
  int b2_width = 0;
  int b3_reduce = 0;
  int b3_width = 0;
  int b4_width = 0;
  bool with_bias = true;
  bool with_bn = true;
  // Without the pool branch b4_width must be 0.
  bool pool_branch = true;

  /// Throws std::invalid_argument when widths do not add up to out_channels
  /// or a width is out of range.
  void validate() const;

  /// Widths (F/4, F/2, F/8, F/8) with reduces (3F/8, F/16), bias and batch
  /// norm on every conv.
  static InceptionConfig ref_config_a(int out_channels);

  friend bool operator==(const InceptionConfig&, const InceptionConfig&) = default;
};

std::string to_string(const InceptionConfig& c);

/// Closed-form trainable parameter count of an Inception block.
std::int64_t inception_param_count(int in_channels, const InceptionConfig& config);

struct SEConfig {
  int channels = 0;
  int reduction = 16;

  int bottleneck() const { return channels / reduction; }
  void validate() const;
};

/// Two biased affine maps C -> C/r -> C.
std::int64_t se_param_count(const SEConfig& config);

/// Biased 2x2 transposed conv: (4 * in + 1) * out.
std::int64_t deconv_param_count(int in_channels, int out_channels);

/// The nine per-stage configs (five encoder, four decoder) of the reference
/// network with level widths [32, 64, 128, 256, 512].
std::vector<InceptionConfig> ref_config_a_levels(int base_width = 32);

struct BuildOptions {
  std::uint64_t seed = 0;
  bool with_se = true;
  int se_reduction = 16;
  int num_classes = 2;
};

struct ForwardOptions {
  Mode mode = Mode::kEval;
  // Replace every SE gate by 1, i.e. run the plain Inception U-Net.
  bool identity_se_gate = false;
  // When set, receives the gate vector of every SE block in order.
  std::vector<std::vector<double>>* se_gates = nullptr;
};

struct LayerShape {
  std::string name;
  Shape shape;
};
using ShapeLedger = std::vector<LayerShape>;

/// Non-trainable state (batch-norm running statistics).
template <typename T>
class Model;

/// Assembles the network from nine Inception configs: five encoder stages
/// with doubling widths, then four decoder stages mirroring encoder widths
/// 4..1. Throws std::invalid_argument on any width mismatch.
template <typename T>
Model<T> build_lwsnet(std::span<const InceptionConfig> configs, const BuildOptions& options = {});

template <typename T>
struct Buffer {
  std::string name;
  std::string layer;
  Tensor<T> value;
};

template <typename T>
class Model {
 public:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  /// An empty model holds no layers; forward() on it throws.
  Model() = default;

  bool empty() const noexcept { return params_.empty(); }
  const std::vector<InceptionConfig>& configs() const noexcept { return configs_; }
  const BuildOptions& options() const noexcept { return options_; }

  std::vector<Parameter<T>>& parameters() noexcept { return params_; }
  const std::vector<Parameter<T>>& parameters() const noexcept { return params_; }
  std::vector<Buffer<T>>& buffers() noexcept { return buffers_; }
  const std::vector<Buffer<T>>& buffers() const noexcept { return buffers_; }

  Parameter<T>* find_parameter(const std::string& name);
  const Parameter<T>* find_parameter(const std::string& name) const;
  Buffer<T>* find_buffer(const std::string& name);

  std::size_t parameter_count() const;
  void zero_grad();

  /// Records the forward pass of a 1 x H x W image (H, W multiples of 16) and
  /// returns 2 x H x W logits. Train mode updates batch-norm running stats.
  Var forward(Tape<T>& tape, Var image, const ForwardOptions& opts = {},
              ShapeLedger* ledger = nullptr);

  /// Eval-mode logits without recording gradients.
  Tensor<T> predict(const Tensor<T>& image, const ForwardOptions& opts = {},
                    ShapeLedger* ledger = nullptr) const;

  template <typename U>
  Model<U> cast() const;

  // Implementation detail exposed for builders.
  struct ConvUnit {
    std::size_t weight = kNone, bias = kNone, gamma = kNone, beta = kNone;
    std::size_t running_mean = kNone, running_var = kNone;
    std::size_t padding = 0;
  };
  struct InceptionBlock {
    std::string name;
    int in_channels = 0;
    InceptionConfig config;
    ConvUnit b1, b2_reduce, b2, b3_reduce, b3, b4;
  };
  struct SEBlock {
    std::string name;
    SEConfig config;
    std::size_t fc1_weight = kNone, fc1_bias = kNone, fc2_weight = kNone, fc2_bias = kNone;
  };
  struct Deconv {
    std::string name;
    std::size_t weight = kNone, bias = kNone;
  };

 private:
  template <typename U>
  friend class Model;
  template <typename U>
  friend Model<U> build_lwsnet(std::span<const InceptionConfig>, const BuildOptions&);

  Var conv_unit(Tape<T>& tape, Var x, ConvUnit& unit, Mode mode);
  Var inception(Tape<T>& tape, Var x, InceptionBlock& block, Mode mode);
  Var squeeze_excite(Tape<T>& tape, Var x, SEBlock& block, const ForwardOptions& opts);

  std::vector<InceptionConfig> configs_;
  BuildOptions options_;
  std::vector<Parameter<T>> params_;
  std::vector<Buffer<T>> buffers_;
  std::vector<InceptionBlock> encoder_;  // Inception-1..5
  std::vector<SEBlock> se_;              // SE-1..4 (empty without SE)
  std::vector<Deconv> deconv_;           // Deconv-1..4
  std::vector<InceptionBlock> decoder_;  // Inception-6..9
  std::size_t final_weight_ = kNone, final_bias_ = kNone;
};

extern template class Model<float>;
extern template class Model<double>;

/// The reference network (ref_config_a_levels) in single precision.
Model<float> build_reference_model(std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Parameter audit against the published per-layer counts.

struct ReferenceLayer {
  std::string name;
  Shape output_shape;                   // for a 1 x 224 x 224 input
  std::optional<std::int64_t> params;   // nullopt for parameter-free rows
};

/// The 23 rows of the published architecture table.
const std::vector<ReferenceLayer>& reference_layers();
inline constexpr std::int64_t kReferenceTotalParams = 1'818'838;

struct AuditRow {
  std::string name;
  std::int64_t expected = 0;
  std::int64_t actual = 0;
  std::int64_t allowance = 0;

  std::int64_t delta() const { return actual - expected; }
  bool ok() const { return delta() <= allowance && -delta() <= allowance; }
};

struct AuditReport {
  std::vector<AuditRow> rows;
  std::int64_t total_expected = kReferenceTotalParams;
  std::int64_t total_actual = 0;

  bool passes() const;
};

/// Compares trainable parameters (weights, biases, BN gamma/beta; running
/// stats excluded) per layer against the reference table. Inception-1 and
/// Inception-2 carry a +-8 allowance; every other row and the total are exact.
template <typename T>
AuditReport audit_params(const Model<T>& model);

// ---------------------------------------------------------------------------
// Count-matching search over Inception branch widths.

struct Fraction {
  int num = 1;
  int den = 1;
};

struct SearchSpace {
  std::vector<Fraction> b1, b2_reduce, b2, b3_reduce, b3, b4;
  std::vector<bool> bias_options{true, false};
  std::vector<bool> bn_options{true, false};
  std::vector<bool> pool_branch_options{true};

  /// Sixteenths of F (1/16 .. 3/4) on every slot.
  static SearchSpace default_grid();
  /// Only the reference fractions, bias and batch norm on.
  static SearchSpace ref_config_a_only();
};

struct SearchHit {
  InceptionConfig config;
  std::int64_t count = 0;
  std::int64_t distance = 0;
};

/// Exhaustive enumeration. Returns every exact match when one exists,
/// otherwise the max_nearest closest configs by |count - target|. Order is
/// deterministic. Throws std::invalid_argument on an empty search space.
std::vector<SearchHit> search_inception_config(int in_channels, int out_channels,
                                               std::int64_t target, const SearchSpace& space,
                                               std::size_t max_nearest = 10);

}  // namespace lwsnet

#endif  // LWSNET_ARCH_HPP_

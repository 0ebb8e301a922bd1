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

// Reverse-mode differentiation over a recorded trace.
//
// A Tape owns every intermediate value of one forward pass. Operations append
// a node holding their output and a closure that maps the output gradient to
// input gradients. Tape::backward() walks the nodes in reverse and finally
// adds leaf gradients into the Parameter objects they came from, so repeated
// backward passes accumulate until Parameter::zero_grad().

#ifndef LWSNET_AUTOGRAD_HPP_
#define LWSNET_AUTOGRAD_HPP_

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lwsnet/tensor.hpp"

namespace lwsnet {

enum class Mode { kTrain, kEval };

template <typename T>
struct Parameter {
  std::string name;
  // Row of the architecture table this parameter is counted under.
  std::string layer;
  Tensor<T> value;
  Tensor<T> grad;

  void zero_grad() { grad = Tensor<T>(value.shape()); }
};

/// Handle to a node on a Tape.
struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;
  bool valid() const noexcept { return id != kNone; }
};

template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& grad_out)>;

  /// A non-recording tape evaluates operations without keeping closures.
  explicit Tape(bool record = true) : record_(record) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor<T> value);
  /// Leaf whose gradient stays readable through grad() after backward().
  Var input(Tensor<T> value);
  Var parameter(Parameter<T>& p);

  /// Appends an operation result. fn is dropped when no input requires grad.
  Var record(Tensor<T> value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor<T> value, std::span<const Var> inputs, BackwardFn fn);

  const Tensor<T>& value(Var v) const;
  const Tensor<T>& grad(Var v) const;
  bool requires_grad(Var v) const;
  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Gradient accumulator for v, zero-allocated on first use. Returns nullptr
  /// when v does not require a gradient.
  Tensor<T>* grad_sink(Var v);

  /// Seeds d(loss)/d(loss) = 1 and propagates. The loss must hold a single
  /// element.
  void backward(Var loss);

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
    bool keep_grad = false;
    BackwardFn backward;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  bool record_;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

namespace ag {

// An invalid bias Var means "no bias".
template <typename T>
Var conv2d(Tape<T>& t, Var x, Var weight, Var bias, std::size_t stride, std::size_t padding);
template <typename T>
Var conv_transpose2d(Tape<T>& t, Var x, Var weight, Var bias);
template <typename T>
Var maxpool2d(Tape<T>& t, Var x, std::size_t kernel, std::size_t stride, std::size_t padding);
template <typename T>
Var global_avg_pool(Tape<T>& t, Var x);

/// Train mode normalizes with per-call statistics and updates the running
/// tensors in place; eval mode reads them.
template <typename T>
Var batch_norm(Tape<T>& t, Var x, Var gamma, Var beta, Tensor<T>& running_mean,
               Tensor<T>& running_var, Mode mode);

template <typename T>
Var relu(Tape<T>& t, Var x);
template <typename T>
Var sigmoid(Tape<T>& t, Var x);
template <typename T>
Var softmax_channelwise(Tape<T>& t, Var x);
template <typename T>
Var concat_channels(Tape<T>& t, std::span<const Var> parts);
template <typename T>
Var channel_scale(Tape<T>& t, Var x, Var gate);
template <typename T>
Var fully_connected(Tape<T>& t, Var x, Var weight, Var bias);

template <typename T>
Var add(Tape<T>& t, Var a, Var b);
template <typename T>
Var mul(Tape<T>& t, Var a, Var b);
template <typename T>
Var sum(Tape<T>& t, Var x);

}  // namespace ag
}  // namespace lwsnet

#endif  // LWSNET_AUTOGRAD_HPP_

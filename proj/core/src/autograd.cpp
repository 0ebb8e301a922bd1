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

#include <memory>
#include <stdexcept>

#include "lwsnet/kernels.hpp"

namespace lwsnet {

template <typename T>
typename Tape<T>::Node& Tape<T>::node(Var v) {
  if (!v.valid() || v.id >= nodes_.size()) throw std::out_of_range("invalid tape variable");
  return nodes_[v.id];
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw std::out_of_range("invalid tape variable");
  return nodes_[v.id];
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, false, false, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::input(Tensor<T> value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, record_, true, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::parameter(Parameter<T>& p) {
  nodes_.push_back(Node{p.value, {}, record_ ? &p : nullptr, record_, false, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, std::span<const Var> inputs, BackwardFn fn) {
  bool needs = false;
  if (record_) {
    for (Var v : inputs) {
      if (v.valid() && node(v).requires_grad) needs = true;
    }
  }
  nodes_.push_back(Node{std::move(value), {}, nullptr, needs, false,
                        needs ? std::move(fn) : BackwardFn{}});
  return Var{nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  return node(v).value;
}

template <typename T>
const Tensor<T>& Tape<T>::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) throw std::logic_error("no gradient recorded for this variable");
  return n.grad;
}

template <typename T>
bool Tape<T>::requires_grad(Var v) const {
  return v.valid() && node(v).requires_grad;
}

template <typename T>
Tensor<T>* Tape<T>::grad_sink(Var v) {
  if (!v.valid()) return nullptr;
  Node& n = node(v);
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
  return &n.grad;
}

template <typename T>
void Tape<T>::backward(Var loss) {
  Node& root = node(loss);
  if (root.value.size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got shape " +
                                to_string(root.value.shape()));
  }
  if (!record_) throw std::logic_error("backward on a non-recording tape");
  if (backward_done_) throw std::logic_error("backward already ran on this tape");
  backward_done_ = true;
  if (!root.requires_grad) return;
  root.grad = Tensor<T>(root.value.shape(), T{1});
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) {
      n.backward(*this, n.grad);
      n.backward = nullptr;
      // Interior nodes are no longer needed once their inputs have gradients.
      n.grad = Tensor<T>();
      n.value = Tensor<T>();
    } else if (n.param) {
      Tensor<T>& dst = n.param->grad;
      if (dst.shape() != n.grad.shape()) dst = Tensor<T>(n.grad.shape());
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
      if (!n.keep_grad) n.grad = Tensor<T>();
    }
  }
}

template class Tape<float>;
template class Tape<double>;

namespace ag {

template <typename T>
Var conv2d(Tape<T>& t, Var x, Var weight, Var bias, std::size_t stride, std::size_t padding) {
  const Tensor<T> no_bias;
  Tensor<T> out = kernels::conv2d(t.value(x), t.value(weight),
                                  bias.valid() ? t.value(bias) : no_bias, stride, padding);
  return t.record(std::move(out), {x, weight, bias},
                  [x, weight, bias, stride, padding](Tape<T>& tp, const Tensor<T>& g) {
                    kernels::conv2d_backward(tp.value(x), tp.value(weight), g, stride, padding,
                                             tp.grad_sink(x), tp.grad_sink(weight),
                                             tp.grad_sink(bias));
                  });
}

template <typename T>
Var conv_transpose2d(Tape<T>& t, Var x, Var weight, Var bias) {
  const Tensor<T> no_bias;
  Tensor<T> out = kernels::conv_transpose2d(t.value(x), t.value(weight),
                                            bias.valid() ? t.value(bias) : no_bias);
  return t.record(std::move(out), {x, weight, bias},
                  [x, weight, bias](Tape<T>& tp, const Tensor<T>& g) {
                    kernels::conv_transpose2d_backward(tp.value(x), tp.value(weight), g,
                                                       tp.grad_sink(x), tp.grad_sink(weight),
                                                       tp.grad_sink(bias));
                  });
}

template <typename T>
Var maxpool2d(Tape<T>& t, Var x, std::size_t kernel, std::size_t stride, std::size_t padding) {
  auto r = kernels::maxpool2d(t.value(x), kernel, stride, padding);
  auto argmax = std::make_shared<std::vector<std::uint32_t>>(std::move(r.argmax));
  return t.record(std::move(r.out), {x}, [x, argmax](Tape<T>& tp, const Tensor<T>& g) {
    if (Tensor<T>* gx = tp.grad_sink(x)) kernels::maxpool2d_backward(g, *argmax, *gx);
  });
}

template <typename T>
Var global_avg_pool(Tape<T>& t, Var x) {
  return t.record(kernels::global_avg_pool(t.value(x)), {x},
                  [x](Tape<T>& tp, const Tensor<T>& g) {
                    if (Tensor<T>* gx = tp.grad_sink(x)) kernels::global_avg_pool_backward(g, *gx);
                  });
}

template <typename T>
Var batch_norm(Tape<T>& t, Var x, Var gamma, Var beta, Tensor<T>& running_mean,
               Tensor<T>& running_var, Mode mode) {
  if (mode == Mode::kTrain) {
    auto stats = std::make_shared<kernels::BatchNormStats<T>>();
    Tensor<T> out = kernels::batch_norm_train(t.value(x), t.value(gamma), t.value(beta),
                                              running_mean, running_var, *stats);
    return t.record(std::move(out), {x, gamma, beta},
                    [x, gamma, beta, stats](Tape<T>& tp, const Tensor<T>& g) {
                      kernels::batch_norm_train_backward(tp.value(x), tp.value(gamma), *stats, g,
                                                         tp.grad_sink(x), tp.grad_sink(gamma),
                                                         tp.grad_sink(beta));
                    });
  }
  Tensor<T> out = kernels::batch_norm_eval(t.value(x), t.value(gamma), t.value(beta),
                                           running_mean, running_var);
  // Running stats are copied so later training steps cannot alter this trace.
  auto saved = std::make_shared<std::pair<Tensor<T>, Tensor<T>>>(running_mean, running_var);
  return t.record(std::move(out), {x, gamma, beta},
                  [x, gamma, beta, saved](Tape<T>& tp, const Tensor<T>& g) {
                    kernels::batch_norm_eval_backward(tp.value(x), tp.value(gamma), saved->first,
                                                      saved->second, g, tp.grad_sink(x),
                                                      tp.grad_sink(gamma), tp.grad_sink(beta));
                  });
}

template <typename T>
Var relu(Tape<T>& t, Var x) {
  Tensor<T> out = kernels::relu(t.value(x));
  Var y{t.size()};
  return t.record(std::move(out), {x}, [x, y](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T>* gx = tp.grad_sink(x);
    if (!gx) return;
    const Tensor<T>& v = tp.value(y);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (v[i] > T{0}) (*gx)[i] += g[i];
    }
  });
}

template <typename T>
Var sigmoid(Tape<T>& t, Var x) {
  Tensor<T> out = kernels::sigmoid(t.value(x));
  Var y{t.size()};
  return t.record(std::move(out), {x}, [x, y](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T>* gx = tp.grad_sink(x);
    if (!gx) return;
    const Tensor<T>& s = tp.value(y);
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * s[i] * (T{1} - s[i]);
  });
}

template <typename T>
Var softmax_channelwise(Tape<T>& t, Var x) {
  Tensor<T> out = kernels::softmax_channelwise(t.value(x));
  Var y{t.size()};
  return t.record(std::move(out), {x}, [x, y](Tape<T>& tp, const Tensor<T>& g) {
    Tensor<T>* gx = tp.grad_sink(x);
    if (!gx) return;
    const Tensor<T>& s = tp.value(y);
    const std::size_t c = s.dim(0), plane = s.size() / c;
    for (std::size_t p = 0; p < plane; ++p) {
      double dot = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) dot += g[ch * plane + p] * s[ch * plane + p];
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t k = ch * plane + p;
        (*gx)[k] += static_cast<T>(s[k] * (g[k] - dot));
      }
    }
  });
}

template <typename T>
Var concat_channels(Tape<T>& t, std::span<const Var> parts) {
  std::vector<const Tensor<T>*> values;
  values.reserve(parts.size());
  for (Var v : parts) values.push_back(&t.value(v));
  Tensor<T> out = kernels::concat_channels<T>(values);
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [inputs](Tape<T>& tp, const Tensor<T>& g) {
    std::size_t offset = 0;
    for (Var v : inputs) {
      const std::size_t n = tp.value(v).size();
      if (Tensor<T>* gv = tp.grad_sink(v)) {
        for (std::size_t i = 0; i < n; ++i) (*gv)[i] += g[offset + i];
      }
      offset += n;
    }
  });
}

template <typename T>
Var channel_scale(Tape<T>& t, Var x, Var gate) {
  Tensor<T> out = kernels::channel_scale(t.value(x), t.value(gate));
  return t.record(std::move(out), {x, gate}, [x, gate](Tape<T>& tp, const Tensor<T>& g) {
    const Tensor<T>& xv = tp.value(x);
    const Tensor<T>& gv = tp.value(gate);
    const std::size_t plane = xv.dim(1) * xv.dim(2);
    Tensor<T>* gx = tp.grad_sink(x);
    Tensor<T>* gg = tp.grad_sink(gate);
    for (std::size_t ch = 0; ch < xv.dim(0); ++ch) {
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t k = ch * plane + i;
        if (gx) (*gx)[k] += g[k] * gv[ch];
        acc += static_cast<double>(g[k]) * xv[k];
      }
      if (gg) (*gg)[ch] += static_cast<T>(acc);
    }
  });
}

template <typename T>
Var fully_connected(Tape<T>& t, Var x, Var weight, Var bias) {
  const Tensor<T> no_bias;
  Tensor<T> out = kernels::fully_connected(t.value(x), t.value(weight),
                                           bias.valid() ? t.value(bias) : no_bias);
  return t.record(std::move(out), {x, weight, bias},
                  [x, weight, bias](Tape<T>& tp, const Tensor<T>& g) {
                    kernels::fully_connected_backward(tp.value(x), tp.value(weight), g,
                                                      tp.grad_sink(x), tp.grad_sink(weight),
                                                      tp.grad_sink(bias));
                  });
}

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
  const Tensor<T>& av = t.value(a);
  const Tensor<T>& bv = t.value(b);
  if (av.shape() != bv.shape()) {
    throw ShapeError("add: shape " + to_string(av.shape()) + " vs " + to_string(bv.shape()));
  }
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& tp, const Tensor<T>& g) {
    for (Var v : {a, b}) {
      if (Tensor<T>* gv = tp.grad_sink(v)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gv)[i] += g[i];
      }
    }
  });
}

template <typename T>
Var mul(Tape<T>& t, Var a, Var b) {
  const Tensor<T>& av = t.value(a);
  const Tensor<T>& bv = t.value(b);
  if (av.shape() != bv.shape()) {
    throw ShapeError("mul: shape " + to_string(av.shape()) + " vs " + to_string(bv.shape()));
  }
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape<T>& tp, const Tensor<T>& g) {
    const Tensor<T>& av2 = tp.value(a);
    const Tensor<T>& bv2 = tp.value(b);
    if (Tensor<T>* ga = tp.grad_sink(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv2[i];
    }
    if (Tensor<T>* gb = tp.grad_sink(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av2[i];
    }
  });
}

template <typename T>
Var sum(Tape<T>& t, Var x) {
  const Tensor<T>& xv = t.value(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) acc += xv[i];
  return t.record(Tensor<T>::scalar(static_cast<T>(acc)), {x},
                  [x](Tape<T>& tp, const Tensor<T>& g) {
                    if (Tensor<T>* gx = tp.grad_sink(x)) {
                      for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += g[0];
                    }
                  });
}

#define LWSNET_INSTANTIATE_AG(T)                                                          \
  template Var conv2d(Tape<T>&, Var, Var, Var, std::size_t, std::size_t);                 \
  template Var conv_transpose2d(Tape<T>&, Var, Var, Var);                                 \
  template Var maxpool2d(Tape<T>&, Var, std::size_t, std::size_t, std::size_t);           \
  template Var global_avg_pool(Tape<T>&, Var);                                            \
  template Var batch_norm(Tape<T>&, Var, Var, Var, Tensor<T>&, Tensor<T>&, Mode);         \
  template Var relu(Tape<T>&, Var);                                                       \
  template Var sigmoid(Tape<T>&, Var);                                                    \
  template Var softmax_channelwise(Tape<T>&, Var);                                        \
  template Var concat_channels(Tape<T>&, std::span<const Var>);                           \
  template Var channel_scale(Tape<T>&, Var, Var);                                         \
  template Var fully_connected(Tape<T>&, Var, Var, Var);                                  \
  template Var add(Tape<T>&, Var, Var);                                                   \
  template Var mul(Tape<T>&, Var, Var);                                                   \
  template Var sum(Tape<T>&, Var);

LWSNET_INSTANTIATE_AG(float)
LWSNET_INSTANTIATE_AG(double)

#undef LWSNET_INSTANTIATE_AG

}  // namespace ag
}  // namespace lwsnet

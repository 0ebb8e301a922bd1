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

#include "lwsnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "lwsnet/eval.hpp"
#include "lwsnet/serialize.hpp"

namespace lwsnet {

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd-momentum";
}

std::optional<OptimizerKind> parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd-momentum" || name == "sgd") return OptimizerKind::kSgdMomentum;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be finite and >= 0");
  }
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
  if (!(positive_weight > 0.0)) throw std::invalid_argument("positive_weight must be > 0");
}

namespace {

void check_mask(const Shape& s, const BinaryMask& mask) {
  if (s.size() != 3 || s[0] != 2) {
    throw ShapeError("pixel_ce_loss expects 2xHxW logits, got " + to_string(s));
  }
  if (s[1] != mask.height || s[2] != mask.width) {
    throw ShapeError("pixel_ce_loss: logits " + to_string(s) + " vs mask " +
                     std::to_string(mask.height) + "x" + std::to_string(mask.width));
  }
}

// Per-pixel log-sum-exp with max subtraction.
template <typename T>
double lse2(T a, T b) {
  const double m = std::max<double>(a, b);
  return m + std::log(std::exp(static_cast<double>(a) - m) + std::exp(static_cast<double>(b) - m));
}

template <typename T>
double weighted_total(const BinaryMask& mask, double pw) {
  const double pos = static_cast<double>(mask.count());
  return pos * pw + (static_cast<double>(mask.bits.size()) - pos);
}

}  // namespace

template <typename T>
double pixel_ce_loss_value(const Tensor<T>& logits, const BinaryMask& mask, double positive_weight) {
  check_mask(logits.shape(), mask);
  const std::size_t plane = mask.bits.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    const bool pos = mask.bits[i] != 0;
    const double nll = lse2(logits[i], logits[plane + i]) - logits[pos ? plane + i : i];
    acc += pos ? positive_weight * nll : nll;
  }
  return acc / weighted_total<T>(mask, positive_weight);
}

template <typename T>
Var pixel_ce_loss(Tape<T>& tape, Var logits, const BinaryMask& mask, double positive_weight) {
  const Tensor<T>& x = tape.value(logits);
  const double loss = pixel_ce_loss_value(x, mask, positive_weight);
  return tape.record(
      Tensor<T>({1}, static_cast<T>(loss)), {logits},
      [logits, &mask, positive_weight](Tape<T>& t, const Tensor<T>& g) {
        Tensor<T>* gx = t.grad_sink(logits);
        if (!gx) return;
        const Tensor<T>& x = t.value(logits);
        const std::size_t plane = mask.bits.size();
        const double scale = static_cast<double>(g[0]) / weighted_total<T>(mask, positive_weight);
        for (std::size_t i = 0; i < plane; ++i) {
          const bool pos = mask.bits[i] != 0;
          const double l = lse2(x[i], x[plane + i]);
          const double p0 = std::exp(static_cast<double>(x[i]) - l);
          const double p1 = std::exp(static_cast<double>(x[plane + i]) - l);
          const double w = (pos ? positive_weight : 1.0) * scale;
          (*gx)[i] += static_cast<T>(w * (p0 - (pos ? 0.0 : 1.0)));
          (*gx)[plane + i] += static_cast<T>(w * (p1 - (pos ? 1.0 : 0.0)));
        }
      });
}

template <typename T>
Optimizer<T>::Optimizer(OptimizerKind kind, double learning_rate, std::size_t num_params)
    : kind_(kind), lr_(learning_rate), m_(num_params), v_(kind == OptimizerKind::kAdam ? num_params : 0) {}

template <typename T>
void Optimizer<T>::step(std::span<Parameter<T>> params) {
  if (params.size() != m_.size()) throw std::invalid_argument("optimizer/parameter count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = params[i];
    if (p.grad.empty()) continue;
    const std::size_t n = p.value.size();
    auto& m = m_[i];
    if (m.empty()) m.assign(n, 0.0);
    if (kind_ == OptimizerKind::kAdam) {
      auto& v = v_[i];
      if (v.empty()) v.assign(n, 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        const double g = p.grad[k];
        m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * g;
        v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * g * g;
        const double update = lr_ * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + kEps);
        p.value[k] = static_cast<T>(p.value[k] - update);
      }
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        m[k] = kMomentum * m[k] + static_cast<double>(p.grad[k]);
        p.value[k] = static_cast<T>(p.value[k] - lr_ * m[k]);
      }
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

template <typename T>
double train_step(Model<T>& model, Optimizer<T>& opt, std::span<const Sample> batch,
                  double positive_weight) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  model.zero_grad();
  double total = 0.0;
  const T inv = static_cast<T>(1.0 / static_cast<double>(batch.size()));
  ForwardOptions fo;
  fo.mode = Mode::kTrain;
  for (const Sample& s : batch) {
    Tape<T> tape;
    Var x = tape.constant(image_tensor(s.image).template cast<T>());
    Var logits = model.forward(tape, x, fo);
    Var loss = pixel_ce_loss(tape, logits, s.mask, positive_weight);
    total += static_cast<double>(tape.value(loss)[0]);
    Var scaled = ag::mul(tape, loss, tape.constant(Tensor<T>({1}, inv)));
    tape.backward(scaled);
  }
  opt.step(model.parameters());
  return total / static_cast<double>(batch.size());
}

double mean_iou(const Model<float>& model, std::span<const Sample> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const Sample& s : samples) acc += iou(predict_mask(model, s.image), s.mask);
  return acc / static_cast<double>(samples.size());
}

TrainResult train(Model<float>& model, std::span<const Sample> train_set,
                  std::span<const Sample> val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("empty training set");
  if (model.empty()) throw std::invalid_argument("cannot train an empty model");

  std::mt19937_64 rng(cfg.seed);
  Optimizer<float> opt(cfg.optimizer, cfg.learning_rate, model.parameters().size());
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.best_val_iou = -1.0;
  Model<float> best = model;
  std::vector<Sample> batch;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Fisher-Yates with explicit draws keeps the order independent of the
    // standard library's shuffle implementation.
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = train_set[order[k]];
        const bool flip = cfg.augment_flip && (rng() & 1u);
        batch.push_back(flip ? flip_horizontal(s) : s);
      }
      loss_sum += train_step(model, opt, std::span<const Sample>(batch), cfg.positive_weight);
      ++steps;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(steps);
    rec.val_iou = val_set.empty() ? 0.0 : mean_iou(model, val_set);
    result.log.push_back(rec);
    if (val_set.empty() || rec.val_iou > result.best_val_iou) {
      result.best_val_iou = rec.val_iou;
      result.best_epoch = epoch;
      best = model;
    }
    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && !cfg.checkpoint_path.empty()) {
      save_model(model, cfg.checkpoint_path);
    }
    if (on_epoch) on_epoch(rec);
  }
  model = std::move(best);
  return result;
}

void write_epoch_csv(std::ostream& out, std::span<const EpochRecord> log) {
  char buf[96];
  out << "epoch,train_loss,val_iou\n";
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.6f\n", r.epoch, r.train_loss, r.val_iou);
    out << buf;
  }
}

template Var pixel_ce_loss<float>(Tape<float>&, Var, const BinaryMask&, double);
template Var pixel_ce_loss<double>(Tape<double>&, Var, const BinaryMask&, double);
template double pixel_ce_loss_value<float>(const Tensor<float>&, const BinaryMask&, double);
template double pixel_ce_loss_value<double>(const Tensor<double>&, const BinaryMask&, double);
template double train_step<float>(Model<float>&, Optimizer<float>&, std::span<const Sample>, double);
template double train_step<double>(Model<double>&, Optimizer<double>&, std::span<const Sample>,
                                   double);

}  // namespace lwsnet

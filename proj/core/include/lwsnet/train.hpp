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

#ifndef LWSNET_TRAIN_HPP_
#define LWSNET_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lwsnet/arch.hpp"
#include "lwsnet/autograd.hpp"
#include "lwsnet/data.hpp"

namespace lwsnet {

enum class OptimizerKind { kAdam, kSgdMomentum };

std::string_view optimizer_name(OptimizerKind kind);
std::optional<OptimizerKind> parse_optimizer(std::string_view name);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 8;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 0;
  bool augment_flip = true;
  // 0 disables periodic checkpoints.
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_path;
  // Loss weight of shelf-edge pixels; 1 means unweighted.
  double positive_weight = 1.0;

  void validate() const;
};

/// Mean over pixels of -log softmax(logits)[true class]. With a positive
/// weight w != 1 the mean is weighted (shelf-edge pixels count w times).
/// The mask is referenced by the backward closure and must outlive backward().
template <typename T>
Var pixel_ce_loss(Tape<T>& tape, Var logits, const BinaryMask& mask, double positive_weight = 1.0);

/// Loss value only.
template <typename T>
double pixel_ce_loss_value(const Tensor<T>& logits, const BinaryMask& mask,
                           double positive_weight = 1.0);

/// Stateful optimizer over a fixed parameter list. step() reads
/// Parameter::grad and updates Parameter::value in place.
template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, std::size_t num_params);

  void step(std::span<Parameter<T>> params);

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  static constexpr double kMomentum = 0.9;

 private:
  OptimizerKind kind_;
  double lr_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

/// One optimizer step on a mini-batch: per-sample forward/backward with the
/// loss scaled by 1 / batch, then one update. Returns the mean batch loss.
template <typename T>
double train_step(Model<T>& model, Optimizer<T>& opt, std::span<const Sample> batch,
                  double positive_weight = 1.0);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_iou = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_val_iou = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains in place and leaves the model at the state with the best
/// validation IoU (the last epoch when val_set is empty). Throws
/// std::invalid_argument on an empty train set or invalid config.
TrainResult train(Model<float>& model, std::span<const Sample> train_set,
                  std::span<const Sample> val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Mean raw IoU of argmax predictions.
double mean_iou(const Model<float>& model, std::span<const Sample> samples);

/// CSV "epoch,train_loss,val_iou".
void write_epoch_csv(std::ostream& out, std::span<const EpochRecord> log);

}  // namespace lwsnet

#endif  // LWSNET_TRAIN_HPP_

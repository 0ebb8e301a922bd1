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

#include <benchmark/benchmark.h>

#include <random>

#include "lwsnet/arch.hpp"
#include "lwsnet/data.hpp"
#include "lwsnet/kernels.hpp"
#include "lwsnet/postprocess.hpp"
#include "lwsnet/train.hpp"

namespace lwsnet {
namespace {

Tensor<float> random_tensor(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  Tensor<float> t(std::move(s));
  for (auto& v : t.data()) v = d(rng);
  return t;
}

// args: channels in/out, spatial size, kernel.
void BM_Conv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto x = random_tensor({c, hw, hw}, 1);
  const auto w = random_tensor({c, c, k, k}, 2);
  const auto b = random_tensor({c}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::conv2d(x, w, b, 1, k / 2));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * k * k * hw * hw));
}
BENCHMARK(BM_Conv2d)->Args({32, 224, 1})->Args({32, 224, 3})->Args({64, 112, 3})->Args({16, 112, 5})
    ->Unit(benchmark::kMillisecond);

void BM_ConvTranspose2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  const auto x = random_tensor({c, hw, hw}, 1);
  const auto w = random_tensor({c, c / 2, 2, 2}, 2);
  const auto b = random_tensor({c / 2}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::conv_transpose2d(x, w, b));
}
BENCHMARK(BM_ConvTranspose2d)->Args({512, 14})->Args({64, 112})->Unit(benchmark::kMillisecond);

void BM_MaxPool(benchmark::State& state) {
  const auto x = random_tensor({32, 224, 224}, 4);
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::maxpool2d(x, k, k == 2 ? 2 : 1, k == 2 ? 0 : 1));
}
BENCHMARK(BM_MaxPool)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_Forward224(benchmark::State& state) {
  const auto model = build_reference_model(0);
  const auto x = random_tensor({1, 224, 224}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(x));
}
BENCHMARK(BM_Forward224)->Unit(benchmark::kMillisecond);

void BM_TrainStep224(benchmark::State& state) {
  auto model = build_reference_model(0);
  Optimizer<float> opt(OptimizerKind::kAdam, 1e-3, model.parameters().size());
  const std::vector<Sample> batch{generate_synthetic(SynthSpec::defaults(Regime::kMixed, 1))};
  for (auto _ : state) benchmark::DoNotOptimize(train_step(model, opt, std::span<const Sample>(batch)));
}
BENCHMARK(BM_TrainStep224)->Unit(benchmark::kMillisecond);

void BM_CompleteEdges(benchmark::State& state) {
  std::mt19937_64 rng(6);
  BinaryMask m(448, 448);
  std::bernoulli_distribution d(0.1);
  for (auto& b : m.bits) b = d(rng);
  for (auto _ : state) benchmark::DoNotOptimize(complete_edges(m));
}
BENCHMARK(BM_CompleteEdges)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace lwsnet

BENCHMARK_MAIN();

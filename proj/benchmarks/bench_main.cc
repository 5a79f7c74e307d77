// Copyright 2026 The NRAM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <vector>

#include "nram/layers.h"
#include "nram/metrics.h"
#include "nram/model.h"
#include "nram/rng.h"

namespace {

using namespace nram;

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t({rows, cols});
  for (auto& v : t.data()) v = rng.uniform() - 0.5;
  return t;
}

// Args: title length, d_model, heads.
void BM_SelfAttentionForward(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  auto params = MultiHeadParams::zeros(d, static_cast<std::size_t>(state.range(2)));
  params.init_uniform(0.1, rng);
  const Tensor x = random_matrix(len, d, rng);
  const Mask mask(len, true);
  for (auto _ : state) {
    benchmark::DoNotOptimize(multi_head_self_attention(x, mask, params));
  }
}
BENCHMARK(BM_SelfAttentionForward)->Args({30, 300, 15})->Args({50, 300, 15})->Args({8, 32, 4});

void BM_SelfAttentionBackward(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto heads = static_cast<std::size_t>(state.range(2));
  Rng rng(2);
  auto params = MultiHeadParams::zeros(d, heads);
  params.init_uniform(0.1, rng);
  auto grads = MultiHeadParams::zeros(d, heads);
  const Tensor x = random_matrix(len, d, rng);
  const Tensor upstream = random_matrix(len, d, rng);
  MultiHeadCache cache;
  multi_head_self_attention(x, Mask(len, true), params, &cache);
  for (auto _ : state) {
    benchmark::DoNotOptimize(multi_head_self_attention_backward(cache, upstream, params, grads));
  }
}
BENCHMARK(BM_SelfAttentionBackward)->Args({30, 300, 15})->Args({8, 32, 4});

ModelConfig config_for(std::int64_t d_model, std::int64_t heads) {
  ModelConfig c;
  c.d_model = static_cast<std::size_t>(d_model);
  c.heads = static_cast<std::size_t>(heads);
  c.d_attn = c.d_model * 2 / 3;
  c.max_title = 20;
  c.max_history = 20;
  c.neg_k = 4;
  return c;
}

TrainingInstance random_instance(const ModelConfig& c, std::size_t vocab, Rng& rng) {
  TrainingInstance inst{TokenMatrix(c.max_history, c.max_title), Mask(c.max_history, true),
                        TokenMatrix(c.neg_k + 1, c.max_title)};
  auto fill = [&](TokenMatrix& m) {
    for (std::size_t r = 0; r < m.rows; ++r) {
      const std::size_t len = 4 + rng.below(c.max_title - 4);
      for (std::size_t j = 0; j < len; ++j) m.row(r)[j] = static_cast<TokenId>(2 + rng.below(vocab - 2));
    }
  };
  fill(inst.history);
  fill(inst.candidates);
  return inst;
}

// One training instance: forward, loss and full backward pass.
// Args: d_model, heads.
void BM_InstanceBackward(benchmark::State& state) {
  const ModelConfig c = config_for(state.range(0), state.range(1));
  Rng rng(3);
  const ModelParams params = ModelParams::initialize(c, 2000, rng);
  const TrainingInstance inst = random_instance(c, 2000, rng);
  for (auto _ : state) benchmark::DoNotOptimize(instance_backward(inst, params));
}
BENCHMARK(BM_InstanceBackward)->Args({64, 4})->Args({300, 15})->Unit(benchmark::kMillisecond);

void BM_InstanceLoss(benchmark::State& state) {
  const ModelConfig c = config_for(state.range(0), state.range(1));
  Rng rng(4);
  const ModelParams params = ModelParams::initialize(c, 2000, rng);
  const TrainingInstance inst = random_instance(c, 2000, rng);
  for (auto _ : state) benchmark::DoNotOptimize(instance_loss(inst, params));
}
BENCHMARK(BM_InstanceLoss)->Args({64, 4})->Args({300, 15})->Unit(benchmark::kMillisecond);

// Arg: candidates per impression. 1000 impressions per iteration.
void BM_EvaluateDataset(benchmark::State& state) {
  Rng rng(5);
  std::vector<ImpressionEval> set(1000);
  for (auto& e : set) {
    for (std::int64_t i = 0; i < state.range(0); ++i) {
      e.labels.push_back(i == 0 || rng.uniform() < 0.1 ? 1 : 0);
      e.scores.push_back(rng.uniform());
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_dataset(set));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_EvaluateDataset)->Arg(10)->Arg(50)->Arg(300);

}  // namespace
BENCHMARK_MAIN();

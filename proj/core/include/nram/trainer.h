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

#ifndef NRAM_TRAINER_H_
#define NRAM_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nram/data.h"
#include "nram/metrics.h"
#include "nram/model.h"

namespace nram {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_opt = 1e-8;
  std::size_t batch_size = 64;
  int max_epochs = 10;
  int patience = 2;
  std::uint64_t seed = 42;
  // Global L2 gradient-norm cap; 0 disables clipping.
  double clip_norm = 0.0;
  std::size_t threads = 1;
  // Serial gradient reduction regardless of `threads`.
  bool deterministic = true;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
  MetricsReport validation;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_auc = 0.0;
};

// "epoch=1\tloss=...\tauc=...\tmrr=...\tndcg@5=...\tndcg@10=...\tseconds=..."
std::string format_epoch_line(const EpochRecord& record);

// Adam with bias-corrected moments. Moments live in ModelParams-shaped
// buffers; the update is p -= lr * m_hat / (sqrt(v_hat) + eps).
class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParams& like, const TrainConfig& config);

  void step(ModelParams& params, const ModelParams& grads);
  std::size_t steps() const { return step_; }

 private:
  TrainConfig config_;
  ModelParams m_;
  ModelParams v_;
  std::size_t step_ = 0;
};

// Encodes every referenced article once, then scores each impression's
// candidates against its user vector (zero for cold-start users). Output is
// in input order and does not depend on `threads`.
std::vector<ImpressionEval> score_impressions(const ModelParams& params,
                                              const NewsIndex& news,
                                              const EvalSet& impressions,
                                              std::size_t threads = 1);

MetricsReport evaluate(const ModelParams& params, const NewsIndex& news,
                       const EvalSet& impressions, std::size_t threads = 1);

// Sums per-instance gradients over `batch` into `grads` (which is zeroed
// first) and returns the summed loss. With threads > 1 and !deterministic,
// contiguous chunks are reduced in chunk order.
double batch_gradients(const std::vector<const TrainingInstance*>& batch,
                       const ModelParams& params, ModelParams& grads,
                       std::size_t threads, bool deterministic);

struct TrainResult {
  ModelParams best_params;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch Adam with a seeded shuffle each epoch. Validation AUC is taken
// after every epoch; training stops once it fails to improve for `patience`
// consecutive epochs, and the parameters of the best epoch are returned.
// Throws DivergedTrainingError on a non-finite batch loss.
TrainResult train(ModelParams params, const std::vector<TrainingInstance>& instances,
                  const NewsIndex& news, const EvalSet& validation,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace nram

#endif  // NRAM_TRAINER_H_

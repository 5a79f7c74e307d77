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

#include "nram/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "nram/errors.h"
#include "nram/rng.h"

namespace nram {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("train config: " + what); };
  if (!(learning_rate >= 0.0)) fail("learning_rate must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) fail("beta1 must be in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) fail("beta2 must be in (0, 1)");
  if (!(eps_opt > 0.0)) fail("eps_opt must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (max_epochs <= 0) fail("max_epochs must be positive");
  if (patience < 1) fail("patience must be >= 1");
  if (!(clip_norm >= 0.0)) fail("clip_norm must be >= 0");
  if (threads == 0) fail("threads must be >= 1");
}

std::string format_epoch_line(const EpochRecord& r) {
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "epoch=%d\tloss=%.10f\tauc=%.10f\tmrr=%.10f\tndcg@5=%.10f\tndcg@10=%.10f\t"
                "seconds=%.3f",
                r.epoch, r.mean_loss, r.validation.auc, r.validation.mrr,
                r.validation.ndcg5, r.validation.ndcg10, r.seconds);
  return buf;
}

AdamOptimizer::AdamOptimizer(const ModelParams& like, const TrainConfig& config)
    : config_(config), m_(like.zeros_like()), v_(like.zeros_like()) {}

void AdamOptimizer::step(ModelParams& params, const ModelParams& grads) {
  ++step_;
  const double t = static_cast<double>(step_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  const double lr = config_.learning_rate;

  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pd = p[i]->data();
    const auto gd = g[i]->data();
    auto md = m[i]->data();
    auto vd = v[i]->data();
    for (std::size_t j = 0; j < pd.size(); ++j) {
      md[j] = config_.beta1 * md[j] + (1.0 - config_.beta1) * gd[j];
      vd[j] = config_.beta2 * vd[j] + (1.0 - config_.beta2) * gd[j] * gd[j];
      const double m_hat = md[j] / correction1;
      const double v_hat = vd[j] / correction2;
      pd[j] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps_opt);
    }
  }
  params.embedding.zero_pad_row();
}

namespace {

// Runs fn(i) for i in [0, n) over `threads` workers in contiguous chunks.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace

std::vector<ImpressionEval> score_impressions(const ModelParams& params,
                                              const NewsIndex& news,
                                              const EvalSet& impressions,
                                              std::size_t threads) {
  // Dense slot per referenced article.
  std::vector<std::size_t> slot(news.size(), NewsIndex::npos);
  std::vector<std::size_t> rows;
  auto note = [&](std::size_t row) {
    if (slot[row] == NewsIndex::npos) {
      slot[row] = rows.size();
      rows.push_back(row);
    }
  };
  for (const auto& imp : impressions.impressions) {
    for (std::size_t r : imp.history) note(r);
    for (std::size_t r : imp.candidates) note(r);
  }

  const std::size_t d_model = params.embedding.dim();
  Tensor vectors({rows.size(), d_model});
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const auto title = news.title(rows[i]);
    const Tensor r = encode_news(title, title_mask(title), params);
    std::copy(r.data().begin(), r.data().end(), vectors.row(i).begin());
  });

  std::vector<ImpressionEval> out(impressions.impressions.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const auto& imp = impressions.impressions[i];
    ImpressionEval& e = out[i];
    e.labels = imp.labels;
    e.scores.assign(imp.candidates.size(), 0.0);
    if (imp.history.empty()) return;
    Tensor history({imp.history.size(), d_model});
    for (std::size_t h = 0; h < imp.history.size(); ++h) {
      const auto src = vectors.row(slot[imp.history[h]]);
      std::copy(src.begin(), src.end(), history.row(h).begin());
    }
    const auto user =
        encode_user_from_news(history, Mask(imp.history.size(), true), params);
    for (std::size_t c = 0; c < imp.candidates.size(); ++c) {
      e.scores[c] = click_score(user->data(), vectors.row(slot[imp.candidates[c]]));
    }
  });
  return out;
}

MetricsReport evaluate(const ModelParams& params, const NewsIndex& news,
                       const EvalSet& impressions, std::size_t threads) {
  return evaluate_dataset(score_impressions(params, news, impressions, threads));
}

double batch_gradients(const std::vector<const TrainingInstance*>& batch,
                       const ModelParams& params, ModelParams& grads,
                       std::size_t threads, bool deterministic) {
  for (Tensor* t : grads.tensors()) t->fill(0.0);
  threads = std::max<std::size_t>(1, std::min(threads, batch.size()));
  if (deterministic || threads == 1) {
    double loss = 0.0;
    for (const TrainingInstance* inst : batch) {
      loss += accumulate_instance_gradients(*inst, params, grads);
    }
    return loss;
  }

  const std::size_t chunk = (batch.size() + threads - 1) / threads;
  const std::size_t chunks = (batch.size() + chunk - 1) / chunk;
  std::vector<ModelParams> partial(chunks, grads);
  std::vector<double> losses(chunks, 0.0);
  std::vector<std::thread> workers;
  for (std::size_t c = 0; c < chunks; ++c) {
    workers.emplace_back([&, c] {
      const std::size_t end = std::min(batch.size(), (c + 1) * chunk);
      for (std::size_t i = c * chunk; i < end; ++i) {
        losses[c] += accumulate_instance_gradients(*batch[i], params, partial[c]);
      }
    });
  }
  for (auto& w : workers) w.join();
  double loss = 0.0;
  auto dst = grads.tensors();
  for (std::size_t c = 0; c < chunks; ++c) {
    loss += losses[c];
    const auto src = partial[c].tensors();
    for (std::size_t t = 0; t < dst.size(); ++t) add_into(*dst[t], *src[t]);
  }
  return loss;
}

namespace {

void scale_and_clip(ModelParams& grads, double scale, double clip_norm) {
  double sq = 0.0;
  for (Tensor* t : grads.tensors()) {
    for (double& v : t->data()) {
      v *= scale;
      sq += v * v;
    }
  }
  if (clip_norm > 0.0) {
    const double norm = std::sqrt(sq);
    if (norm > clip_norm) {
      const double shrink = clip_norm / norm;
      for (Tensor* t : grads.tensors()) {
        for (double& v : t->data()) v *= shrink;
      }
    }
  }
}

}  // namespace

TrainResult train(ModelParams params, const std::vector<TrainingInstance>& instances,
                  const NewsIndex& news, const EvalSet& validation,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (instances.empty()) throw UsageError("train: empty training set");

  Rng rng(config.seed);
  AdamOptimizer optimizer(params, config);
  ModelParams grads = params.zeros_like();
  TrainResult result{params, {}};
  int stale_epochs = 0;

  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    std::vector<const TrainingInstance*> batch;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&instances[order[i]]);

      const double batch_loss =
          batch_gradients(batch, params, grads, config.threads, config.deterministic);
      if (!std::isfinite(batch_loss)) {
        throw DivergedTrainingError("training diverged: non-finite loss at epoch " +
                                        std::to_string(epoch) + ", batch " +
                                        std::to_string(batch_index),
                                    epoch, batch_index);
      }
      loss_sum += batch_loss;
      scale_and_clip(grads, 1.0 / static_cast<double>(batch.size()), config.clip_norm);
      optimizer.step(params, grads);
      ++batch_index;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.mean_loss = loss_sum / static_cast<double>(instances.size());
    record.validation = evaluate(params, news, validation, config.threads);
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count();
    result.history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (result.history.best_epoch == 0 || record.validation.auc > result.history.best_auc) {
      result.history.best_epoch = epoch;
      result.history.best_auc = record.validation.auc;
      result.best_params = params;
      stale_epochs = 0;
    } else if (++stale_epochs >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace nram

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

#include "nram/model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nram/errors.h"

namespace nram {

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("model config: " + what); };
  if (d_model == 0) fail("d_model must be positive");
  if (heads == 0) fail("heads must be positive");
  if (d_model % heads != 0) {
    fail("d_model " + std::to_string(d_model) + " is not divisible by heads " +
         std::to_string(heads));
  }
  if (d_attn == 0) fail("d_attn must be positive");
  if (max_title == 0) fail("max_title must be >= 1");
  if (max_history == 0) fail("max_history must be >= 1");
  if (neg_k == 0) fail("neg_k must be >= 1");
}

ModelParams ModelParams::zeros(const ModelConfig& config, std::size_t vocab_size) {
  config.validate();
  if (vocab_size < 2) throw ConfigError("vocabulary must hold at least PAD and UNK");
  return ModelParams{
      EmbeddingTable::zeros(vocab_size, config.d_model),
      MultiHeadParams::zeros(config.d_model, config.heads),
      AdditiveAttentionParams::zeros(config.d_model, config.d_attn),
      MultiHeadParams::zeros(config.d_model, config.heads),
      AdditiveAttentionParams::zeros(config.d_model, config.d_attn),
  };
}

ModelParams ModelParams::initialize(const ModelConfig& config,
                                    std::size_t vocab_size, Rng& rng) {
  ModelParams p = zeros(config, vocab_size);
  p.embedding = EmbeddingTable::random(vocab_size, config.d_model, 0.1, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.d_model));
  p.news_mha.init_uniform(bound, rng);
  p.news_pool.init_uniform(bound, rng);
  p.user_mha.init_uniform(bound, rng);
  p.user_pool.init_uniform(bound, rng);
  return p;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (Tensor* t : z.tensors()) t->fill(0.0);
  return z;
}

namespace {

template <typename Params, typename Out>
void collect(Params& p, Out& out) {
  out.push_back(&p.embedding.matrix);
  auto add_mha = [&out](auto& mha) {
    for (auto& w : mha.w_q) out.push_back(&w);
    for (auto& w : mha.w_k) out.push_back(&w);
    for (auto& w : mha.w_v) out.push_back(&w);
    out.push_back(&mha.w_o);
  };
  auto add_pool = [&out](auto& pool) {
    out.push_back(&pool.w_a);
    out.push_back(&pool.b_a);
    out.push_back(&pool.v_a);
  };
  add_mha(p.news_mha);
  add_pool(p.news_pool);
  add_mha(p.user_mha);
  add_pool(p.user_pool);
}

}  // namespace

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out;
  collect(*this, out);
  return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
  std::vector<const Tensor*> out;
  collect(*this, out);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : tensors()) n += t->size();
  return n;
}

Mask title_mask(std::span<const TokenId> tokens) {
  Mask mask(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) mask[i] = tokens[i] != kPadId;
  return mask;
}

Tensor encode_news(std::span<const TokenId> tokens, const Mask& mask,
                   const ModelParams& params, NewsEncoderCache* cache) {
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    throw DegenerateTitleError("encode_news: title has no non-pad tokens");
  }
  const Tensor embedded = embed(tokens, params.embedding);
  const Tensor attended = multi_head_self_attention(
      embedded, mask, params.news_mha, cache ? &cache->mha : nullptr);
  PoolResult pooled = additive_attention_pool(attended, mask, params.news_pool,
                                              cache ? &cache->pool : nullptr);
  if (cache) cache->tokens.assign(tokens.begin(), tokens.end());
  return std::move(pooled.pooled);
}

void encode_news_backward(const NewsEncoderCache& cache, const Tensor& upstream,
                          const ModelParams& params, ModelParams& grads) {
  const Tensor grad_attended = additive_attention_pool_backward(
      cache.pool, upstream, params.news_pool, grads.news_pool);
  const Tensor grad_embedded = multi_head_self_attention_backward(
      cache.mha, grad_attended, params.news_mha, grads.news_mha);
  embed_backward(cache.tokens, grad_embedded, grads.embedding.matrix);
}

std::optional<Tensor> encode_user_from_news(const Tensor& news_vectors,
                                            const Mask& history_mask,
                                            const ModelParams& params,
                                            UserEncoderCache* cache) {
  if (std::none_of(history_mask.begin(), history_mask.end(),
                   [](bool b) { return b; })) {
    return std::nullopt;
  }
  const Tensor attended = multi_head_self_attention(
      news_vectors, history_mask, params.user_mha, cache ? &cache->mha : nullptr);
  PoolResult pooled = additive_attention_pool(attended, history_mask, params.user_pool,
                                              cache ? &cache->pool : nullptr);
  return std::move(pooled.pooled);
}

Tensor encode_user_backward(const UserEncoderCache& cache, const Tensor& upstream,
                            const ModelParams& params, ModelParams& grads) {
  const Tensor grad_attended = additive_attention_pool_backward(
      cache.pool, upstream, params.user_pool, grads.user_pool);
  return multi_head_self_attention_backward(cache.mha, grad_attended,
                                            params.user_mha, grads.user_mha);
}

namespace {

// Encodes each valid history row; invalid rows stay zero and are never read.
Tensor encode_history(const TokenMatrix& history, const Mask& history_mask,
                      const ModelParams& params,
                      std::vector<NewsEncoderCache>* caches) {
  if (history_mask.size() != history.rows) {
    throw DimensionError("history mask length " + std::to_string(history_mask.size()) +
                         " != history rows " + std::to_string(history.rows));
  }
  Tensor news_vectors({history.rows, params.embedding.dim()});
  if (caches) caches->assign(history.rows, {});
  for (std::size_t i = 0; i < history.rows; ++i) {
    if (!history_mask[i]) continue;
    const auto tokens = history.row(i);
    const Tensor r = encode_news(tokens, title_mask(tokens), params,
                                 caches ? &(*caches)[i] : nullptr);
    std::copy(r.data().begin(), r.data().end(), news_vectors.row(i).begin());
  }
  return news_vectors;
}

}  // namespace

std::optional<Tensor> encode_user(const TokenMatrix& history,
                                  const Mask& history_mask,
                                  const ModelParams& params) {
  const Tensor news_vectors = encode_history(history, history_mask, params, nullptr);
  return encode_user_from_news(news_vectors, history_mask, params);
}

double click_score(std::span<const double> user, std::span<const double> news) {
  if (user.size() != news.size()) {
    throw DimensionError("click_score: user dimension " + std::to_string(user.size()) +
                         " != news dimension " + std::to_string(news.size()));
  }
  return dot(user, news);
}

namespace {

double softmax_cross_entropy(const Tensor& scores, Tensor* probabilities) {
  const auto s = scores.data();
  const double max_score = *std::max_element(s.begin(), s.end());
  double total = 0.0;
  for (double v : s) total += std::exp(v - max_score);
  const double log_normalizer = max_score + std::log(total);
  if (probabilities) {
    *probabilities = Tensor({s.size()});
    for (std::size_t i = 0; i < s.size(); ++i) {
      (*probabilities)[i] = std::exp(s[i] - log_normalizer);
    }
  }
  return log_normalizer - s[TrainingInstance::positive_index];
}

struct ForwardState {
  std::vector<NewsEncoderCache> history_caches;
  UserEncoderCache user_cache;
  std::vector<NewsEncoderCache> candidate_caches;
  std::optional<Tensor> user;
  std::vector<Tensor> candidate_vectors;
  Tensor scores;
};

ForwardState forward(const TrainingInstance& instance, const ModelParams& params,
                     bool keep_caches) {
  ForwardState st;
  const Tensor news_vectors =
      encode_history(instance.history, instance.history_mask, params,
                     keep_caches ? &st.history_caches : nullptr);
  st.user = encode_user_from_news(news_vectors, instance.history_mask, params,
                                  keep_caches ? &st.user_cache : nullptr);

  const std::size_t n = instance.candidates.rows;
  if (n == 0) throw DimensionError("instance has no candidates");
  if (keep_caches) st.candidate_caches.resize(n);
  st.scores = Tensor({n});
  for (std::size_t c = 0; c < n; ++c) {
    const auto tokens = instance.candidates.row(c);
    st.candidate_vectors.push_back(encode_news(
        tokens, title_mask(tokens), params,
        keep_caches ? &st.candidate_caches[c] : nullptr));
    st.scores[c] = st.user ? click_score(st.user->data(), st.candidate_vectors[c].data())
                           : 0.0;
  }
  return st;
}

}  // namespace

LossResult instance_loss(const TrainingInstance& instance, const ModelParams& params) {
  ForwardState st = forward(instance, params, false);
  const double loss = softmax_cross_entropy(st.scores, nullptr);
  return LossResult{loss, std::move(st.scores)};
}

namespace {

double backward_into(const TrainingInstance& instance, const ModelParams& params,
                     ModelParams& grads, Tensor* scores_out, Tensor* score_grads_out) {
  ForwardState st = forward(instance, params, true);
  Tensor score_grads;
  const double loss = softmax_cross_entropy(st.scores, &score_grads);
  score_grads[TrainingInstance::positive_index] -= 1.0;

  if (st.user) {
    const std::size_t d_model = params.embedding.dim();
    Tensor grad_user({d_model});
    Tensor grad_candidate({d_model});
    for (std::size_t c = 0; c < st.candidate_vectors.size(); ++c) {
      axpy(score_grads[c], st.candidate_vectors[c].data(), grad_user.data());
      grad_candidate.fill(0.0);
      axpy(score_grads[c], st.user->data(), grad_candidate.data());
      encode_news_backward(st.candidate_caches[c], grad_candidate, params, grads);
    }
    const Tensor grad_news = encode_user_backward(st.user_cache, grad_user, params, grads);
    for (std::size_t i = 0; i < instance.history.rows; ++i) {
      if (!instance.history_mask[i]) continue;
      const auto row = grad_news.row(i);
      const Tensor upstream({d_model}, std::vector<double>(row.begin(), row.end()));
      encode_news_backward(st.history_caches[i], upstream, params, grads);
    }
  }
  // Cold-start users have a constant zero vector: every score is 0 and no
  // parameter influences the loss.
  grads.embedding.zero_pad_row();
  if (scores_out) *scores_out = std::move(st.scores);
  if (score_grads_out) *score_grads_out = std::move(score_grads);
  return loss;
}

}  // namespace

InstanceGradients instance_backward(const TrainingInstance& instance,
                                    const ModelParams& params) {
  InstanceGradients out;
  out.grads = params.zeros_like();
  out.loss = backward_into(instance, params, out.grads, &out.scores, &out.score_grads);
  return out;
}

double accumulate_instance_gradients(const TrainingInstance& instance,
                                     const ModelParams& params, ModelParams& grads) {
  return backward_into(instance, params, grads, nullptr, nullptr);
}

std::vector<RankedCandidate> rank_candidates(
    const TokenMatrix& history, const Mask& history_mask,
    const std::vector<std::vector<TokenId>>& candidates, const ModelParams& params) {
  if (candidates.empty()) throw UsageError("rank_candidates: empty candidate list");
  const std::optional<Tensor> user = encode_user(history, history_mask, params);
  std::vector<RankedCandidate> ranked;
  ranked.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double score = 0.0;
    if (user) {
      const Tensor r = encode_news(candidates[i], title_mask(candidates[i]), params);
      score = click_score(user->data(), r.data());
    }
    ranked.push_back({i, score});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedCandidate& a, const RankedCandidate& b) {
                     return a.score > b.score;
                   });
  return ranked;
}

}  // namespace nram

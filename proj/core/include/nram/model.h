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

#ifndef NRAM_MODEL_H_
#define NRAM_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nram/layers.h"
#include "nram/rng.h"
#include "nram/tensor.h"

namespace nram {

struct ModelConfig {
  std::size_t d_model = 300;
  std::size_t heads = 15;
  std::size_t d_attn = 200;
  std::size_t max_title = 30;    // M, tokens per title
  std::size_t max_history = 50;  // N_hist, articles per history
  std::size_t neg_k = 4;         // K, negatives per positive
  std::uint64_t seed = 42;

  std::size_t d_k() const { return heads == 0 ? 0 : d_model / heads; }

  // Throws ConfigError on any violated constraint.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Every learnable tensor. The same type doubles as the gradient container.
struct ModelParams {
  EmbeddingTable embedding;  // shared by both encoders
  MultiHeadParams news_mha;
  AdditiveAttentionParams news_pool;
  MultiHeadParams user_mha;
  AdditiveAttentionParams user_pool;

  static ModelParams zeros(const ModelConfig& config, std::size_t vocab_size);
  // Embedding uniform in [-0.1, 0.1] (pad row zero); every other weight
  // uniform in [-1/sqrt(d_model), 1/sqrt(d_model)]; biases zero.
  static ModelParams initialize(const ModelConfig& config, std::size_t vocab_size,
                                Rng& rng);
  ModelParams zeros_like() const;

  // Fixed traversal order, shared by the checkpoint format, the optimizer
  // and the gradient checker:
  //   embedding;
  //   news_mha: W_Q[0..h), W_K[0..h), W_V[0..h), W_O;
  //   news_pool: W_a, b_a, v_a;
  //   user_mha (as news_mha); user_pool (as news_pool).
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;

  std::size_t parameter_count() const;
};

// Row-major matrix of token ids.
struct TokenMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<TokenId> ids;

  TokenMatrix() = default;
  TokenMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), ids(r * c, kPadId) {}

  std::span<TokenId> row(std::size_t r) { return std::span(ids).subspan(r * cols, cols); }
  std::span<const TokenId> row(std::size_t r) const {
    return std::span(ids).subspan(r * cols, cols);
  }
  friend bool operator==(const TokenMatrix&, const TokenMatrix&) = default;
};

// true wherever the token is not padding.
Mask title_mask(std::span<const TokenId> tokens);

// One positive candidate (always row 0) plus K negatives, and the user's
// padded click history.
struct TrainingInstance {
  TokenMatrix history;    // [N_hist x M]
  Mask history_mask;      // [N_hist]
  TokenMatrix candidates; // [(K+1) x M]
  static constexpr std::size_t positive_index = 0;
};

struct NewsEncoderCache {
  std::vector<TokenId> tokens;
  MultiHeadCache mha;
  AdditivePoolCache pool;
};

struct UserEncoderCache {
  MultiHeadCache mha;
  AdditivePoolCache pool;
};

// embed -> multi-head self-attention -> additive pooling. Throws
// DegenerateTitleError when the mask keeps no token.
Tensor encode_news(std::span<const TokenId> tokens, const Mask& mask,
                   const ModelParams& params, NewsEncoderCache* cache = nullptr);

void encode_news_backward(const NewsEncoderCache& cache, const Tensor& upstream,
                          const ModelParams& params, ModelParams& grads);

// User vector from already-encoded history news [N_hist x d_model].
// std::nullopt signals a cold-start user (no valid history rows); callers
// treat that as the zero vector.
std::optional<Tensor> encode_user_from_news(const Tensor& news_vectors,
                                            const Mask& history_mask,
                                            const ModelParams& params,
                                            UserEncoderCache* cache = nullptr);

// Returns dLoss/d(news_vectors).
Tensor encode_user_backward(const UserEncoderCache& cache, const Tensor& upstream,
                            const ModelParams& params, ModelParams& grads);

std::optional<Tensor> encode_user(const TokenMatrix& history,
                                  const Mask& history_mask,
                                  const ModelParams& params);

// Inner product u . r_c; no squashing.
double click_score(std::span<const double> user, std::span<const double> news);

struct LossResult {
  double loss = 0.0;
  Tensor scores;  // [K+1]
};

// -log softmax(scores)[0] over the K+1 candidates.
LossResult instance_loss(const TrainingInstance& instance, const ModelParams& params);

struct InstanceGradients {
  double loss = 0.0;
  Tensor scores;
  Tensor score_grads;  // softmax(scores) - onehot(0)
  ModelParams grads;
};

InstanceGradients instance_backward(const TrainingInstance& instance,
                                    const ModelParams& params);

// Adds this instance's gradient into `grads` and returns its loss. The pad
// embedding row never receives gradient.
double accumulate_instance_gradients(const TrainingInstance& instance,
                                     const ModelParams& params, ModelParams& grads);

struct RankedCandidate {
  std::size_t index = 0;
  double score = 0.0;
};

// Scores every candidate title against the user and sorts by descending
// score, ties by ascending input index. Cold-start users score all zeros.
std::vector<RankedCandidate> rank_candidates(
    const TokenMatrix& history, const Mask& history_mask,
    const std::vector<std::vector<TokenId>>& candidates, const ModelParams& params);

}  // namespace nram

#endif  // NRAM_MODEL_H_

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

#ifndef NRAM_LAYERS_H_
#define NRAM_LAYERS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nram/rng.h"
#include "nram/tensor.h"

namespace nram {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;

// Word embedding lookup table [V x d_model]. Row kPadId is held at zero.
struct EmbeddingTable {
  Tensor matrix;

  static EmbeddingTable zeros(std::size_t vocab_size, std::size_t dim);
  static EmbeddingTable random(std::size_t vocab_size, std::size_t dim,
                               double bound, Rng& rng);

  std::size_t vocab_size() const { return matrix.rank() == 2 ? matrix.extent(0) : 0; }
  std::size_t dim() const { return matrix.rank() == 2 ? matrix.extent(1) : 0; }
  void zero_pad_row();
};

// [L x d_model]; row j is table row ids[j]. Throws OutOfVocabularyError for
// ids outside [0, V).
Tensor embed(std::span<const TokenId> ids, const EmbeddingTable& table);

// Scatters upstream [L x d_model] into grad_table rows (accumulating).
// The pad row never receives gradient.
void embed_backward(std::span<const TokenId> ids, const Tensor& upstream,
                    Tensor& grad_table);

// Per-head projections W_Q/W_K/W_V [d_model x d_k] and the output projection
// W_O [(heads * d_k) x d_model].
struct MultiHeadParams {
  std::vector<Tensor> w_q;
  std::vector<Tensor> w_k;
  std::vector<Tensor> w_v;
  Tensor w_o;

  // Zero-initialised; throws ConfigError unless heads divides d_model.
  static MultiHeadParams zeros(std::size_t d_model, std::size_t heads);

  std::size_t heads() const { return w_q.size(); }
  std::size_t d_model() const { return w_o.rank() == 2 ? w_o.extent(1) : 0; }
  std::size_t d_k() const { return heads() == 0 ? 0 : w_q.front().extent(1); }

  void init_uniform(double bound, Rng& rng);
};

// Forward state kept for the backward pass.
struct MultiHeadCache {
  Tensor x;
  Mask mask;
  std::vector<Tensor> q, k, v;
  std::vector<Tensor> attention;  // [L x L] per head; rows sum to 1
  Tensor concat;                  // [L x heads * d_k]
  bool valid = false;
};

// Scaled dot-product self-attention in every head with a key-side padding
// mask, heads concatenated and projected by W_O. Output is [L x d_model].
Tensor multi_head_self_attention(const Tensor& x, const Mask& mask,
                                 const MultiHeadParams& params,
                                 MultiHeadCache* cache = nullptr);

// Returns dLoss/dX and accumulates parameter gradients into `grads`, which
// must have the same shapes as `params`.
Tensor multi_head_self_attention_backward(const MultiHeadCache& cache,
                                          const Tensor& upstream,
                                          const MultiHeadParams& params,
                                          MultiHeadParams& grads);

// score_i = v_a . tanh(W_a^T h_i + b_a), with W_a [d_model x d_a].
struct AdditiveAttentionParams {
  Tensor w_a;
  Tensor b_a;
  Tensor v_a;

  static AdditiveAttentionParams zeros(std::size_t d_model, std::size_t d_attn);

  std::size_t d_model() const { return w_a.rank() == 2 ? w_a.extent(0) : 0; }
  std::size_t d_attn() const { return b_a.size(); }

  // W_a and v_a uniform in [-bound, bound]; b_a left at zero.
  void init_uniform(double bound, Rng& rng);
};

struct PoolResult {
  Tensor pooled;   // [d_model]
  Tensor weights;  // [L]
};

struct AdditivePoolCache {
  Tensor h;
  Mask mask;
  Tensor hidden;   // tanh(H W_a + b_a), [L x d_a]
  Tensor weights;  // [L]
  bool valid = false;
};

PoolResult additive_attention_pool(const Tensor& h, const Mask& mask,
                                   const AdditiveAttentionParams& params,
                                   AdditivePoolCache* cache = nullptr);

// Returns dLoss/dH [L x d_model]; accumulates parameter gradients.
Tensor additive_attention_pool_backward(const AdditivePoolCache& cache,
                                        const Tensor& upstream,
                                        const AdditiveAttentionParams& params,
                                        AdditiveAttentionParams& grads);

}  // namespace nram

#endif  // NRAM_LAYERS_H_

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

#include "nram/layers.h"

#include <cmath>
#include <string>

#include "nram/errors.h"

namespace nram {
namespace {

void fill_uniform(Tensor& t, double bound, Rng& rng) {
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
}

Tensor column_block(const Tensor& m, std::size_t offset, std::size_t width) {
  Tensor out({m.rows(), width});
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto src = m.row(r).subspan(offset, width);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

void set_column_block(Tensor& m, std::size_t offset, const Tensor& block) {
  for (std::size_t r = 0; r < block.rows(); ++r) {
    const auto src = block.row(r);
    std::copy(src.begin(), src.end(), m.row(r).begin() + offset);
  }
}

void check_sequence(const Tensor& x, const Mask& mask, std::size_t d_model,
                    const char* op) {
  if (x.rank() != 2 || x.extent(1) != d_model) {
    throw DimensionError(std::string(op) + ": input " + x.shape_string() +
                         " does not have " + std::to_string(d_model) + " columns");
  }
  if (mask.size() != x.extent(0)) {
    throw DimensionError(std::string(op) + ": mask length " +
                         std::to_string(mask.size()) + " != sequence length " +
                         std::to_string(x.extent(0)));
  }
}

}  // namespace

EmbeddingTable EmbeddingTable::zeros(std::size_t vocab_size, std::size_t dim) {
  return EmbeddingTable{Tensor({vocab_size, dim})};
}

EmbeddingTable EmbeddingTable::random(std::size_t vocab_size, std::size_t dim,
                                      double bound, Rng& rng) {
  EmbeddingTable table = zeros(vocab_size, dim);
  fill_uniform(table.matrix, bound, rng);
  table.zero_pad_row();
  return table;
}

void EmbeddingTable::zero_pad_row() {
  if (vocab_size() > 0) {
    auto pad = matrix.row(kPadId);
    std::fill(pad.begin(), pad.end(), 0.0);
  }
}

Tensor embed(std::span<const TokenId> ids, const EmbeddingTable& table) {
  const std::size_t vocab = table.vocab_size();
  Tensor out({ids.size(), table.dim()});
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const TokenId id = ids[j];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw OutOfVocabularyError("embed: token id " + std::to_string(id) +
                                 " outside vocabulary of size " +
                                 std::to_string(vocab));
    }
    const auto src = table.matrix.row(static_cast<std::size_t>(id));
    std::copy(src.begin(), src.end(), out.row(j).begin());
  }
  return out;
}

void embed_backward(std::span<const TokenId> ids, const Tensor& upstream,
                    Tensor& grad_table) {
  if (upstream.rows() != ids.size() || upstream.cols() != grad_table.cols()) {
    throw DimensionError("embed_backward: upstream " + upstream.shape_string() +
                         " incompatible with " + std::to_string(ids.size()) +
                         " ids and table " + grad_table.shape_string());
  }
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (ids[j] == kPadId) continue;
    axpy(1.0, upstream.row(j), grad_table.row(static_cast<std::size_t>(ids[j])));
  }
}

MultiHeadParams MultiHeadParams::zeros(std::size_t d_model, std::size_t heads) {
  if (heads == 0 || d_model == 0 || d_model % heads != 0) {
    throw ConfigError("multi-head attention: d_model " + std::to_string(d_model) +
                      " is not divisible by heads " + std::to_string(heads));
  }
  const std::size_t d_k = d_model / heads;
  MultiHeadParams p;
  for (std::size_t i = 0; i < heads; ++i) {
    p.w_q.emplace_back(std::vector<std::size_t>{d_model, d_k});
    p.w_k.emplace_back(std::vector<std::size_t>{d_model, d_k});
    p.w_v.emplace_back(std::vector<std::size_t>{d_model, d_k});
  }
  p.w_o = Tensor({heads * d_k, d_model});
  return p;
}

void MultiHeadParams::init_uniform(double bound, Rng& rng) {
  for (std::size_t i = 0; i < heads(); ++i) {
    fill_uniform(w_q[i], bound, rng);
    fill_uniform(w_k[i], bound, rng);
    fill_uniform(w_v[i], bound, rng);
  }
  fill_uniform(w_o, bound, rng);
}

Tensor multi_head_self_attention(const Tensor& x, const Mask& mask,
                                 const MultiHeadParams& params,
                                 MultiHeadCache* cache) {
  const std::size_t d_model = params.d_model();
  const std::size_t d_k = params.d_k();
  const std::size_t heads = params.heads();
  check_sequence(x, mask, d_model, "multi_head_self_attention");
  const std::size_t len = x.extent(0);
  if (len == 0) throw DimensionError("multi_head_self_attention: empty sequence");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));

  Tensor concat({len, heads * d_k});
  if (cache) {
    cache->q.clear();
    cache->k.clear();
    cache->v.clear();
    cache->attention.clear();
  }
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor q = matmul(x, params.w_q[h]);
    Tensor k = matmul(x, params.w_k[h]);
    Tensor v = matmul(x, params.w_v[h]);
    Tensor scores = matmul_nt(q, k);
    Tensor attention({len, len});
    for (std::size_t r = 0; r < len; ++r) {
      auto logits = scores.row(r);
      for (double& s : logits) s *= scale;
      const Tensor weights = masked_softmax(logits, mask);
      std::copy(weights.data().begin(), weights.data().end(),
                attention.row(r).begin());
    }
    set_column_block(concat, h * d_k, matmul(attention, v));
    if (cache) {
      cache->q.push_back(std::move(q));
      cache->k.push_back(std::move(k));
      cache->v.push_back(std::move(v));
      cache->attention.push_back(std::move(attention));
    }
  }
  Tensor out = matmul(concat, params.w_o);
  if (cache) {
    cache->x = x;
    cache->mask = mask;
    cache->concat = std::move(concat);
    cache->valid = true;
  }
  return out;
}

Tensor multi_head_self_attention_backward(const MultiHeadCache& cache,
                                          const Tensor& upstream,
                                          const MultiHeadParams& params,
                                          MultiHeadParams& grads) {
  if (!cache.valid) {
    throw UsageError("multi_head_self_attention_backward: forward state was not cached");
  }
  const std::size_t len = cache.x.extent(0);
  const std::size_t d_k = params.d_k();
  if (upstream.rows() != len || upstream.cols() != params.d_model()) {
    throw DimensionError("multi_head_self_attention_backward: upstream " +
                         upstream.shape_string() + " does not match output [" +
                         std::to_string(len) + "x" +
                         std::to_string(params.d_model()) + "]");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));

  add_into(grads.w_o, matmul_tn(cache.concat, upstream));
  const Tensor grad_concat = matmul_nt(upstream, params.w_o);

  Tensor grad_x({len, params.d_model()});
  for (std::size_t h = 0; h < params.heads(); ++h) {
    const Tensor& attention = cache.attention[h];
    const Tensor grad_head = column_block(grad_concat, h * d_k, d_k);

    const Tensor grad_v = matmul_tn(attention, grad_head);
    Tensor grad_scores = matmul_nt(grad_head, cache.v[h]);
    // Row-wise softmax Jacobian; masked keys have zero weight and stay zero.
    for (std::size_t r = 0; r < len; ++r) {
      const auto a = attention.row(r);
      auto g = grad_scores.row(r);
      const double inner = dot(a, g);
      for (std::size_t c = 0; c < len; ++c) g[c] = a[c] * (g[c] - inner) * scale;
    }
    const Tensor grad_q = matmul(grad_scores, cache.k[h]);
    const Tensor grad_k = matmul_tn(grad_scores, cache.q[h]);

    add_into(grads.w_q[h], matmul_tn(cache.x, grad_q));
    add_into(grads.w_k[h], matmul_tn(cache.x, grad_k));
    add_into(grads.w_v[h], matmul_tn(cache.x, grad_v));
    add_into(grad_x, matmul_nt(grad_q, params.w_q[h]));
    add_into(grad_x, matmul_nt(grad_k, params.w_k[h]));
    add_into(grad_x, matmul_nt(grad_v, params.w_v[h]));
  }
  return grad_x;
}

AdditiveAttentionParams AdditiveAttentionParams::zeros(std::size_t d_model,
                                                       std::size_t d_attn) {
  if (d_model == 0 || d_attn == 0) {
    throw ConfigError("additive attention: d_model and d_attn must be positive");
  }
  return AdditiveAttentionParams{Tensor({d_model, d_attn}), Tensor({d_attn}),
                                 Tensor({d_attn})};
}

void AdditiveAttentionParams::init_uniform(double bound, Rng& rng) {
  fill_uniform(w_a, bound, rng);
  fill_uniform(v_a, bound, rng);
  b_a.fill(0.0);
}

PoolResult additive_attention_pool(const Tensor& h, const Mask& mask,
                                   const AdditiveAttentionParams& params,
                                   AdditivePoolCache* cache) {
  check_sequence(h, mask, params.d_model(), "additive_attention_pool");
  const std::size_t len = h.extent(0);

  Tensor hidden = matmul(h, params.w_a);
  for (std::size_t i = 0; i < len; ++i) {
    auto row = hidden.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = std::tanh(row[j] + params.b_a[j]);
  }
  std::vector<double> scores(len);
  for (std::size_t i = 0; i < len; ++i) scores[i] = dot(hidden.row(i), params.v_a.data());

  PoolResult result{Tensor({params.d_model()}), masked_softmax(scores, mask)};
  for (std::size_t i = 0; i < len; ++i) {
    if (mask[i]) axpy(result.weights[i], h.row(i), result.pooled.data());
  }
  if (cache) {
    cache->h = h;
    cache->mask = mask;
    cache->hidden = std::move(hidden);
    cache->weights = result.weights;
    cache->valid = true;
  }
  return result;
}

Tensor additive_attention_pool_backward(const AdditivePoolCache& cache,
                                        const Tensor& upstream,
                                        const AdditiveAttentionParams& params,
                                        AdditiveAttentionParams& grads) {
  if (!cache.valid) {
    throw UsageError("additive_attention_pool_backward: forward state was not cached");
  }
  if (upstream.size() != params.d_model()) {
    throw DimensionError("additive_attention_pool_backward: upstream " +
                         upstream.shape_string() + " does not match d_model " +
                         std::to_string(params.d_model()));
  }
  const std::size_t len = cache.h.extent(0);
  const std::size_t d_attn = params.d_attn();
  const auto& w = cache.weights;

  Tensor grad_h({len, params.d_model()});
  std::vector<double> grad_w(len);
  for (std::size_t i = 0; i < len; ++i) {
    axpy(w[i], upstream.data(), grad_h.row(i));
    grad_w[i] = dot(cache.h.row(i), upstream.data());
  }
  double inner = 0.0;
  for (std::size_t i = 0; i < len; ++i) inner += w[i] * grad_w[i];

  // dz = (ds_i * v_a) * (1 - tanh^2), row by row.
  Tensor grad_z({len, d_attn});
  for (std::size_t i = 0; i < len; ++i) {
    const double grad_score = w[i] * (grad_w[i] - inner);
    if (grad_score == 0.0) continue;
    const auto t = cache.hidden.row(i);
    axpy(grad_score, t, grads.v_a.data());
    auto gz = grad_z.row(i);
    for (std::size_t j = 0; j < d_attn; ++j) {
      gz[j] = grad_score * params.v_a[j] * (1.0 - t[j] * t[j]);
      grads.b_a[j] += gz[j];
    }
  }
  add_into(grads.w_a, matmul_tn(cache.h, grad_z));
  add_into(grad_h, matmul_nt(grad_z, params.w_a));
  return grad_h;
}

}  // namespace nram

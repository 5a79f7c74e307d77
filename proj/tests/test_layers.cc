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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "nram/errors.h"
#include "nram/gradcheck.h"
#include "nram/layers.h"
#include "support/oracles.h"

using namespace nram;
using testing::random_tensor;

namespace {

MultiHeadParams random_mha(std::size_t d_model, std::size_t heads, Rng& rng,
                           double scale = 0.6) {
  MultiHeadParams p = MultiHeadParams::zeros(d_model, heads);
  p.init_uniform(scale, rng);
  return p;
}

AdditiveAttentionParams random_pool(std::size_t d_model, std::size_t d_attn, Rng& rng) {
  AdditiveAttentionParams p = AdditiveAttentionParams::zeros(d_model, d_attn);
  p.init_uniform(0.8, rng);
  for (double& v : p.b_a.data()) v = rng.uniform(-0.3, 0.3);
  return p;
}

Mask random_mask(std::size_t n, Rng& rng) {
  Mask m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = rng.uniform() < 0.7;
  m[rng.below(n)] = true;
  return m;
}

double weighted_sum(const Tensor& out, const Tensor& weights) {
  return dot(out.data(), weights.data());
}

std::vector<Tensor*> mha_tensors(MultiHeadParams& p) {
  std::vector<Tensor*> out;
  for (auto& w : p.w_q) out.push_back(&w);
  for (auto& w : p.w_k) out.push_back(&w);
  for (auto& w : p.w_v) out.push_back(&w);
  out.push_back(&p.w_o);
  return out;
}

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    std::copy(x.row(perm[i]).begin(), x.row(perm[i]).end(), out.row(i).begin());
  }
  return out;
}

Mask permute_mask(const Mask& m, const std::vector<std::size_t>& perm) {
  Mask out(m.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out[i] = m[perm[i]];
  return out;
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

}  // namespace

TEST_CASE("embed") {
  Rng rng(1);
  EmbeddingTable table = EmbeddingTable::random(6, 4, 0.1, rng);

  SUBCASE("pad ids give zero rows") {
    const std::vector<TokenId> ids{0, 0, 0};
    CHECK(embed(ids, table) == Tensor({3, 4}));
  }
  SUBCASE("one-hot row lookup") {
    auto row = table.matrix.row(3);
    std::fill(row.begin(), row.end(), 0.0);
    row[2] = 1.0;
    const std::vector<TokenId> ids{3};
    CHECK(embed(ids, table) == Tensor::matrix({{0, 0, 1, 0}}));
  }
  SUBCASE("out-of-vocabulary id") {
    const std::vector<TokenId> ids{1, 6};
    CHECK_THROWS_AS(embed(ids, table), OutOfVocabularyError);
    const std::vector<TokenId> neg{-1};
    CHECK_THROWS_AS(embed(neg, table), OutOfVocabularyError);
  }
  SUBCASE("backward of sum over a repeated id") {
    const std::vector<TokenId> ids{4, 4};
    Tensor grad({6, 4});
    embed_backward(ids, Tensor({2, 4}, 1.0), grad);
    for (double v : grad.row(4)) CHECK(v == 2.0);
    auto loss = [&] {
      const Tensor e = embed(ids, table);
      double s = 0;
      for (double v : e.data()) s += v;
      return s;
    };
    std::vector<Tensor*> params{&table.matrix};
    std::vector<const Tensor*> grads{&grad};
    CHECK(finite_difference_check(loss, params, grads).max_relative_error < 1e-8);
  }
  SUBCASE("pad row gets no gradient") {
    const std::vector<TokenId> ids{0, 2};
    Tensor grad({6, 4});
    embed_backward(ids, Tensor({2, 4}, 1.0), grad);
    for (double v : grad.row(0)) CHECK(v == 0.0);
  }
}

TEST_CASE("multi-head parameters enforce divisibility") {
  CHECK_THROWS_AS(MultiHeadParams::zeros(10, 3), ConfigError);
  CHECK_THROWS_AS(MultiHeadParams::zeros(10, 0), ConfigError);
  const auto p = MultiHeadParams::zeros(12, 3);
  CHECK(p.d_k() == 4);
  CHECK(p.w_o.shape() == std::vector<std::size_t>{12, 12});
  const auto q = MultiHeadParams::zeros(300, 15);
  CHECK(q.d_k() == 20);
}

TEST_CASE("multi_head_self_attention forward") {
  Rng rng(2);

  SUBCASE("single position: output is x W_V W_O") {
    const auto p = random_mha(6, 2, rng);
    const Tensor x = random_tensor({1, 6}, rng);
    MultiHeadCache cache;
    const Tensor out = multi_head_self_attention(x, {true}, p, &cache);
    for (const auto& a : cache.attention) CHECK(a[0] == 1.0);
    Tensor concat({1, 6});
    for (std::size_t h = 0; h < 2; ++h) {
      const Tensor v = matmul(x, p.w_v[h]);
      for (std::size_t c = 0; c < 3; ++c) concat(0, h * 3 + c) = v(0, c);
    }
    CHECK(max_abs_difference(out, matmul(concat, p.w_o)) < 1e-14);
  }
  SUBCASE("identical rows give identical outputs") {
    const auto p = random_mha(6, 3, rng);
    Tensor x = random_tensor({2, 6}, rng);
    std::copy(x.row(0).begin(), x.row(0).end(), x.row(1).begin());
    const Tensor out = multi_head_self_attention(x, {true, true}, p);
    for (std::size_t c = 0; c < 6; ++c) CHECK(out(0, c) == out(1, c));
  }
  SUBCASE("matches the naive reference loop") {
    const auto p = random_mha(4, 2, rng);
    const Tensor x = random_tensor({3, 4}, rng);
    const Mask mask{true, true, true};
    const auto ref = testing::naive_mha(testing::to_mat(x), mask, p);
    const Tensor out = multi_head_self_attention(x, mask, p);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(out(i, j) - ref[i][j]) < 1e-10);
    }
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t heads = 1 + rng.below(3);
      const std::size_t d = heads * (1 + rng.below(4));
      const std::size_t len = 1 + rng.below(6);
      const auto q = random_mha(d, heads, rng);
      const Tensor y = random_tensor({len, d}, rng);
      const Mask m = random_mask(len, rng);
      const auto r = testing::naive_mha(testing::to_mat(y), m, q);
      const Tensor o = multi_head_self_attention(y, m, q);
      for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t j = 0; j < d; ++j) CHECK(std::abs(o(i, j) - r[i][j]) < 1e-10);
      }
    }
  }
  SUBCASE("attention rows sum to one and ignore masked keys") {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t len = 1 + rng.below(6);
      const auto p = random_mha(6, 2, rng);
      const Mask m = random_mask(len, rng);
      MultiHeadCache cache;
      multi_head_self_attention(random_tensor({len, 6}, rng), m, p, &cache);
      for (const auto& a : cache.attention) {
        for (std::size_t r = 0; r < len; ++r) {
          double s = 0;
          for (std::size_t c = 0; c < len; ++c) {
            s += a(r, c);
            if (!m[c]) CHECK(a(r, c) == 0.0);
          }
          CHECK(std::abs(s - 1.0) < 1e-12);
        }
      }
    }
  }
  SUBCASE("all-false mask") {
    const auto p = random_mha(4, 2, rng);
    CHECK_THROWS_AS(multi_head_self_attention(random_tensor({2, 4}, rng), {false, false}, p),
                    DegenerateMaskError);
  }
}

TEST_CASE("multi_head_self_attention invariances") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t heads = 1 + rng.below(3);
    const std::size_t d = heads * (1 + rng.below(4));
    const std::size_t len = 1 + rng.below(6);
    const auto p = random_mha(d, heads, rng);
    const Tensor x = random_tensor({len, d}, rng);
    const Mask m = random_mask(len, rng);
    const Tensor out = multi_head_self_attention(x, m, p);

    const auto perm = random_permutation(len, rng);
    const Tensor permuted = multi_head_self_attention(permute_rows(x, perm),
                                                      permute_mask(m, perm), p);
    CHECK(max_abs_difference(permuted, permute_rows(out, perm)) < 1e-9);

    const std::size_t extra = 1 + rng.below(3);
    Tensor padded({len + extra, d});
    std::copy(x.data().begin(), x.data().end(), padded.data().begin());
    for (std::size_t i = len; i < len + extra; ++i) {
      for (double& v : padded.row(i)) v = rng.uniform(-1, 1);
    }
    Mask padded_mask = m;
    padded_mask.resize(len + extra, false);
    const Tensor padded_out = multi_head_self_attention(padded, padded_mask, p);
    for (std::size_t i = 0; i < len; ++i) {
      if (!m[i]) continue;
      for (std::size_t j = 0; j < d; ++j) CHECK(std::abs(padded_out(i, j) - out(i, j)) < 1e-9);
    }
  }
}

TEST_CASE("multi_head_self_attention backward") {
  Rng rng(8);

  SUBCASE("missing cache") {
    const auto p = random_mha(4, 2, rng);
    auto g = MultiHeadParams::zeros(4, 2);
    CHECK_THROWS_AS(multi_head_self_attention_backward(MultiHeadCache{}, Tensor({1, 4}), p, g),
                    UsageError);
  }
  SUBCASE("zero upstream gives zero gradients") {
    const auto p = random_mha(6, 3, rng);
    MultiHeadCache cache;
    multi_head_self_attention(random_tensor({4, 6}, rng), {true, true, false, true}, p, &cache);
    auto g = MultiHeadParams::zeros(6, 3);
    const Tensor gx = multi_head_self_attention_backward(cache, Tensor({4, 6}), p, g);
    CHECK(gx == Tensor({4, 6}));
    for (Tensor* t : mha_tensors(g)) CHECK(*t == Tensor(t->shape()));
  }
  SUBCASE("finite differences on seeded instances") {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t heads = 1 + rng.below(3);
      const std::size_t d = heads * (1 + rng.below(12 / heads));
      const std::size_t len = 1 + rng.below(6);
      auto p = random_mha(d, heads, rng);
      Tensor x = random_tensor({len, d}, rng);
      const Mask m = random_mask(len, rng);
      const Tensor upstream = random_tensor({len, d}, rng);

      MultiHeadCache cache;
      multi_head_self_attention(x, m, p, &cache);
      auto g = MultiHeadParams::zeros(d, heads);
      const Tensor gx = multi_head_self_attention_backward(cache, upstream, p, g);

      std::vector<Tensor*> params = mha_tensors(p);
      params.push_back(&x);
      std::vector<const Tensor*> grads;
      for (Tensor* t : mha_tensors(g)) grads.push_back(t);
      grads.push_back(&gx);
      auto loss = [&] { return weighted_sum(multi_head_self_attention(x, m, p), upstream); };
      const auto result = finite_difference_check(loss, params, grads, 1e-5);
      CHECK(result.max_relative_error < 1e-4);
    }
  }
  SUBCASE("masked key rows receive no gradient through keys and values") {
    const auto p = random_mha(6, 2, rng);
    const Mask m{true, false, true};
    MultiHeadCache cache;
    multi_head_self_attention(random_tensor({3, 6}, rng), m, p, &cache);
    // Upstream only at valid query rows, as pooling delivers it.
    Tensor upstream = random_tensor({3, 6}, rng);
    for (double& v : upstream.row(1)) v = 0.0;
    auto g = MultiHeadParams::zeros(6, 2);
    const Tensor gx = multi_head_self_attention_backward(cache, upstream, p, g);
    for (double v : gx.row(1)) CHECK(v == 0.0);
  }
}

TEST_CASE("additive_attention_pool forward") {
  Rng rng(12);

  SUBCASE("identical rows: uniform weights, pooled equals the row") {
    const auto p = random_pool(5, 4, rng);
    Tensor h({3, 5});
    const Tensor row = random_tensor({5}, rng);
    for (std::size_t i = 0; i < 3; ++i) {
      std::copy(row.data().begin(), row.data().end(), h.row(i).begin());
    }
    const auto r = additive_attention_pool(h, {true, true, true}, p);
    for (double w : r.weights.data()) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    for (std::size_t j = 0; j < 5; ++j) CHECK(r.pooled[j] == doctest::Approx(row[j]).epsilon(1e-14));
  }
  SUBCASE("single position returns it regardless of params") {
    const auto p = random_pool(5, 4, rng);
    const Tensor h = random_tensor({1, 5}, rng);
    const auto r = additive_attention_pool(h, {true}, p);
    CHECK(r.weights[0] == 1.0);
    for (std::size_t j = 0; j < 5; ++j) CHECK(r.pooled[j] == h(0, j));
  }
  SUBCASE("matches the scalar-loop oracle") {
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t len = trial == 0 ? 3 : 1 + rng.below(6);
      const auto p = random_pool(6, 3, rng);
      const Tensor h = random_tensor({len, 6}, rng);
      const Mask m = trial == 0 ? Mask{true, true, true} : random_mask(len, rng);
      const auto [ref_r, ref_w] = testing::naive_pool(testing::to_mat(h), m, p);
      const auto r = additive_attention_pool(h, m, p);
      for (std::size_t i = 0; i < len; ++i) CHECK(std::abs(r.weights[i] - ref_w[i]) < 1e-12);
      for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(r.pooled[j] - ref_r[j]) < 1e-12);
    }
  }
  SUBCASE("degenerate mask") {
    const auto p = random_pool(4, 2, rng);
    CHECK_THROWS_AS(additive_attention_pool(random_tensor({2, 4}, rng), {false, false}, p),
                    DegenerateMaskError);
  }
  SUBCASE("permutation and padding invariance") {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t len = 1 + rng.below(6);
      const auto p = random_pool(6, 4, rng);
      const Tensor h = random_tensor({len, 6}, rng);
      const Mask m = random_mask(len, rng);
      const Tensor r = additive_attention_pool(h, m, p).pooled;
      const auto perm = random_permutation(len, rng);
      const Tensor rp =
          additive_attention_pool(permute_rows(h, perm), permute_mask(m, perm), p).pooled;
      CHECK(max_abs_difference(r, rp) < 1e-9);

      Tensor padded({len + 2, 6});
      std::copy(h.data().begin(), h.data().end(), padded.data().begin());
      for (std::size_t i = len; i < len + 2; ++i) {
        for (double& v : padded.row(i)) v = rng.uniform(-1, 1);
      }
      Mask pm = m;
      pm.resize(len + 2, false);
      CHECK(max_abs_difference(r, additive_attention_pool(padded, pm, p).pooled) < 1e-9);
    }
  }
}

TEST_CASE("additive_attention_pool backward") {
  Rng rng(13);

  SUBCASE("missing cache") {
    const auto p = random_pool(4, 2, rng);
    auto g = AdditiveAttentionParams::zeros(4, 2);
    CHECK_THROWS_AS(additive_attention_pool_backward(AdditivePoolCache{}, Tensor({4}), p, g),
                    UsageError);
  }
  SUBCASE("zero upstream") {
    const auto p = random_pool(4, 3, rng);
    AdditivePoolCache cache;
    additive_attention_pool(random_tensor({3, 4}, rng), {true, true, true}, p, &cache);
    auto g = AdditiveAttentionParams::zeros(4, 3);
    CHECK(additive_attention_pool_backward(cache, Tensor({4}), p, g) == Tensor({3, 4}));
    CHECK(g.w_a == Tensor({4, 3}));
    CHECK(g.b_a == Tensor({3}));
    CHECK(g.v_a == Tensor({3}));
  }
  SUBCASE("finite differences") {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t d = 1 + rng.below(12);
      const std::size_t da = 1 + rng.below(6);
      const std::size_t len = 1 + rng.below(6);
      auto p = random_pool(d, da, rng);
      Tensor h = random_tensor({len, d}, rng);
      const Mask m = random_mask(len, rng);
      const Tensor upstream = random_tensor({d}, rng);
      AdditivePoolCache cache;
      additive_attention_pool(h, m, p, &cache);
      auto g = AdditiveAttentionParams::zeros(d, da);
      const Tensor gh = additive_attention_pool_backward(cache, upstream, p, g);
      std::vector<Tensor*> params{&p.w_a, &p.b_a, &p.v_a, &h};
      std::vector<const Tensor*> grads{&g.w_a, &g.b_a, &g.v_a, &gh};
      auto loss = [&] { return weighted_sum(additive_attention_pool(h, m, p).pooled, upstream); };
      CHECK(finite_difference_check(loss, params, grads, 1e-5).max_relative_error < 1e-4);
    }
  }
  SUBCASE("masked rows receive zero gradient") {
    const auto p = random_pool(4, 3, rng);
    AdditivePoolCache cache;
    additive_attention_pool(random_tensor({3, 4}, rng), {true, false, true}, p, &cache);
    auto g = AdditiveAttentionParams::zeros(4, 3);
    const Tensor gh = additive_attention_pool_backward(cache, random_tensor({4}, rng), p, g);
    for (double v : gh.row(1)) CHECK(v == 0.0);
  }
}

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

#ifndef NRAM_TENSOR_H_
#define NRAM_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace nram {

// Key-side (or position) validity mask; true = keep.
using Mask = std::vector<bool>;

// Dense row-major array of doubles. Rank 1-3 in practice. Copies are deep.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::vector<std::size_t> shape) {
    return Tensor(std::move(shape));
  }
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Matrix view helpers; rank-1 tensors are treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  void fill(double value);
  bool all_finite() const;

  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// a[m x k] * b[k x n]. Fixed i-k-j loop order, so results are reproducible.
Tensor matmul(const Tensor& a, const Tensor& b);
// a^T * b, for a[k x m], b[k x n].
Tensor matmul_tn(const Tensor& a, const Tensor& b);
// a * b^T, for a[m x k], b[n x k].
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// Softmax over the entries whose mask bit is set; masked entries are exactly 0.
// Throws DegenerateMaskError when nothing is kept.
Tensor masked_softmax(std::span<const double> logits, const Mask& mask);

Tensor tanh_elementwise(const Tensor& x);

double dot(std::span<const double> a, std::span<const double> b);

// out += scale * x, element-wise over equal-length spans.
void axpy(double scale, std::span<const double> x, std::span<double> out);

// Accumulates src into dst; shapes must match.
void add_into(Tensor& dst, const Tensor& src);

double max_abs_difference(const Tensor& a, const Tensor& b);

}  // namespace nram

#endif  // NRAM_TENSOR_H_

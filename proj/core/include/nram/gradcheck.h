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

#ifndef NRAM_GRADCHECK_H_
#define NRAM_GRADCHECK_H_

#include <cstddef>
#include <functional>
#include <span>

#include "nram/tensor.h"

namespace nram {

struct GradCheckResult {
  double max_relative_error = 0.0;
  // Flat index (across all tensors, in order) of the worst scalar.
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

inline constexpr double kRelativeErrorFloor = 1e-6;

// Compares analytic gradients against central differences
//   (loss(theta + eps) - loss(theta - eps)) / (2 eps)
// for every scalar of every tensor in `params`. The loss closure must read the
// tensors through the same pointers; each scalar is restored after probing.
// Relative error is |a - f| / max(|a|, |f|, kRelativeErrorFloor). Central
// differences carry roughly 1e-11 of rounding noise at eps = 1e-5, so
// gradients far below the floor are effectively compared in absolute terms.
//
// Throws NumericInstabilityError if a perturbed loss is not finite.
GradCheckResult finite_difference_check(const std::function<double()>& loss,
                                        std::span<Tensor* const> params,
                                        std::span<const Tensor* const> grads,
                                        double epsilon = 1e-5);

}  // namespace nram

#endif  // NRAM_GRADCHECK_H_

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

#include "nram/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "nram/errors.h"

namespace nram {

GradCheckResult finite_difference_check(const std::function<double()>& loss,
                                        std::span<Tensor* const> params,
                                        std::span<const Tensor* const> grads,
                                        double epsilon) {
  if (!(epsilon > 0.0)) throw UsageError("finite_difference_check: epsilon must be > 0");
  if (params.size() != grads.size()) {
    throw DimensionError("finite_difference_check: " +
                         std::to_string(params.size()) + " parameter tensors but " +
                         std::to_string(grads.size()) + " gradient tensors");
  }

  GradCheckResult result;
  std::size_t flat = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& p = *params[t];
    const Tensor& g = *grads[t];
    if (p.shape() != g.shape()) {
      throw DimensionError("finite_difference_check: tensor " + std::to_string(t) +
                           " has shape " + p.shape_string() + " but gradient " +
                           g.shape_string());
    }
    for (std::size_t i = 0; i < p.size(); ++i, ++flat) {
      const double saved = p[i];
      p[i] = saved + epsilon;
      const double plus = loss();
      p[i] = saved - epsilon;
      const double minus = loss();
      p[i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericInstabilityError(
            "finite_difference_check: non-finite loss while perturbing parameter " +
                std::to_string(flat),
            flat);
      }
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double analytic = g[i];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), kRelativeErrorFloor});
      const double rel = std::abs(analytic - numeric) / denom;
      if (result.checked == 0 || rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_index = flat;
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
      ++result.checked;
    }
  }
  return result;
}

}  // namespace nram

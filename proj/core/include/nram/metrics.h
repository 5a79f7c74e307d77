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

#ifndef NRAM_METRICS_H_
#define NRAM_METRICS_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace nram {

// Labels and model scores for one impression.
struct ImpressionEval {
  std::vector<int> labels;  // 1 = clicked
  std::vector<double> scores;
};

// Every metric returns std::nullopt ("skipped") when it is undefined for the
// impression. Rankings sort by score descending, ties by ascending index.

// P(random positive outscores random negative); ties count 0.5.
// Undefined unless both classes are present.
std::optional<double> auc(const ImpressionEval& e);

// Mean over positives of 1/rank. Undefined without a positive.
std::optional<double> mrr(const ImpressionEval& e);

// Binary-gain DCG@k over the score order divided by the ideal DCG@k.
// Undefined without a positive. k must be >= 1.
std::optional<double> ndcg_at_k(const ImpressionEval& e, std::size_t k);

// Positions ordered by score descending, ties by ascending index.
std::vector<std::size_t> ranking_order(const std::vector<double>& scores);

struct MetricsReport {
  double auc = 0.0;
  double mrr = 0.0;
  double ndcg5 = 0.0;
  double ndcg10 = 0.0;
  std::size_t impressions = 0;  // impressions included in the means
  std::size_t skipped = 0;      // single-class (or < 2 item) impressions

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Macro-average over impressions that have both a click and a non-click;
// the others are counted in `skipped`. Throws EmptyReportError when nothing
// is scorable.
MetricsReport evaluate_dataset(const std::vector<ImpressionEval>& impressions);

// Fixed key/value text, one "key=value" per line in this order:
// auc, mrr, ndcg@5, ndcg@10, impressions, skipped.
std::string format_report(const MetricsReport& report);
MetricsReport parse_report(const std::string& text);

}  // namespace nram

#endif  // NRAM_METRICS_H_

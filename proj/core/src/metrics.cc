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

#include "nram/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "nram/errors.h"

namespace nram {
namespace {

void check(const ImpressionEval& e) {
  if (e.labels.size() != e.scores.size()) {
    throw DimensionError("impression has " + std::to_string(e.labels.size()) +
                         " labels but " + std::to_string(e.scores.size()) + " scores");
  }
}

std::size_t positives(const ImpressionEval& e) {
  return static_cast<std::size_t>(
      std::count_if(e.labels.begin(), e.labels.end(), [](int l) { return l > 0; }));
}

}  // namespace

std::vector<std::size_t> ranking_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::optional<double> auc(const ImpressionEval& e) {
  check(e);
  const std::size_t n = e.labels.size();
  const std::size_t p = positives(e);
  if (p == 0 || p == n) return std::nullopt;

  // Sort ascending by score and assign mid-ranks to tie groups; the
  // Mann-Whitney U statistic then gives the tie-aware pair count.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return e.scores[a] < e.scores[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && e.scores[order[j]] == e.scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t t = i; t < j; ++t) {
      if (e.labels[order[t]] > 0) positive_rank_sum += mid_rank;
    }
    i = j;
  }
  const double pd = static_cast<double>(p);
  const double nd = static_cast<double>(n - p);
  return (positive_rank_sum - pd * (pd + 1.0) / 2.0) / (pd * nd);
}

std::optional<double> mrr(const ImpressionEval& e) {
  check(e);
  const std::size_t p = positives(e);
  if (p == 0) return std::nullopt;
  const auto order = ranking_order(e.scores);
  double total = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (e.labels[order[rank]] > 0) total += 1.0 / static_cast<double>(rank + 1);
  }
  return total / static_cast<double>(p);
}

std::optional<double> ndcg_at_k(const ImpressionEval& e, std::size_t k) {
  check(e);
  if (k == 0) throw UsageError("ndcg_at_k: k must be >= 1");
  const std::size_t p = positives(e);
  if (p == 0) return std::nullopt;
  const auto order = ranking_order(e.scores);
  const std::size_t cutoff = std::min(k, order.size());
  double dcg = 0.0;
  for (std::size_t i = 0; i < cutoff; ++i) {
    if (e.labels[order[i]] > 0) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
  }
  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(cutoff, p); ++i) {
    ideal += 1.0 / std::log2(static_cast<double>(i + 2));
  }
  return dcg / ideal;
}

MetricsReport evaluate_dataset(const std::vector<ImpressionEval>& impressions) {
  MetricsReport report;
  for (const auto& e : impressions) {
    const auto a = auc(e);
    if (!a) {
      ++report.skipped;
      continue;
    }
    report.auc += *a;
    report.mrr += *mrr(e);
    report.ndcg5 += *ndcg_at_k(e, 5);
    report.ndcg10 += *ndcg_at_k(e, 10);
    ++report.impressions;
  }
  if (report.impressions == 0) {
    throw EmptyReportError("evaluate_dataset: no impression has both a click and a non-click (" +
                           std::to_string(report.skipped) + " skipped)");
  }
  const double n = static_cast<double>(report.impressions);
  report.auc /= n;
  report.mrr /= n;
  report.ndcg5 /= n;
  report.ndcg10 /= n;
  return report;
}

std::string format_report(const MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "auc=%.10f\nmrr=%.10f\nndcg@5=%.10f\nndcg@10=%.10f\nimpressions=%zu\nskipped=%zu\n",
                r.auc, r.mrr, r.ndcg5, r.ndcg10, r.impressions, r.skipped);
  return buf;
}

MetricsReport parse_report(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(std::string("metrics report lacks key ") + key, 0);
    return it->second;
  };
  MetricsReport r;
  r.auc = std::stod(get("auc"));
  r.mrr = std::stod(get("mrr"));
  r.ndcg5 = std::stod(get("ndcg@5"));
  r.ndcg10 = std::stod(get("ndcg@10"));
  r.impressions = std::stoul(get("impressions"));
  r.skipped = std::stoul(get("skipped"));
  return r;
}

}  // namespace nram

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

#ifndef NRAM_DATA_H_
#define NRAM_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nram/layers.h"
#include "nram/model.h"
#include "nram/rng.h"

namespace nram {

// One row of news.tsv. Entity columns are kept verbatim and never parsed.
struct NewsRecord {
  std::string news_id;
  std::string category;
  std::string subcategory;
  std::string title;
  std::string abstract;
  std::string url;
  std::string title_entities;
  std::string abstract_entities;

  friend bool operator==(const NewsRecord&, const NewsRecord&) = default;
};

struct ImpressionItem {
  std::string news_id;
  int label = 0;  // 1 = clicked ("-1" suffix), 0 = shown but skipped ("-0")

  friend bool operator==(const ImpressionItem&, const ImpressionItem&) = default;
};

// One row of behaviors.tsv. `time` is carried as an opaque string.
struct ImpressionRecord {
  std::string impression_id;
  std::string user_id;
  std::string time;
  std::vector<std::string> history;
  std::vector<ImpressionItem> impressions;

  friend bool operator==(const ImpressionRecord&, const ImpressionRecord&) = default;
};

// Tab-separated, no header, 8 columns. Throws ParseError (with the 1-based
// line number) on a wrong column count and DuplicateIdError on a repeated id.
std::vector<NewsRecord> parse_news_tsv(std::istream& in);
std::vector<NewsRecord> parse_news_tsv(const std::filesystem::path& path);
std::string serialize_news_line(const NewsRecord& record);

// Tab-separated, no header, 5 columns; history and impressions are
// space-separated, impressions carry a "-0"/"-1" click suffix.
std::vector<ImpressionRecord> parse_behaviors_tsv(std::istream& in);
std::vector<ImpressionRecord> parse_behaviors_tsv(const std::filesystem::path& path);
std::string serialize_behaviors_line(const ImpressionRecord& record);

// Lowercases ASCII letters and splits on every maximal run of ASCII
// characters that are not letters or digits. Bytes >= 0x80 count as word
// characters so UTF-8 sequences are never split.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr std::string_view kPadToken = "[PAD]";
  static constexpr std::string_view kUnkToken = "[UNK]";

  Vocabulary();
  // tokens[0] and tokens[1] must be the PAD and UNK markers.
  explicit Vocabulary(std::vector<std::string> tokens, std::size_t min_count = 1);

  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  std::size_t min_count() const { return min_count_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // One token per line, line index == id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  std::size_t min_count_ = 1;
};

// Title tokens with corpus frequency >= min_count get ids 2.. ordered by
// descending frequency, ties lexicographic. Throws ConfigError if min_count < 1.
Vocabulary build_vocabulary(const std::vector<NewsRecord>& news, std::size_t min_count);

struct PretrainedEmbeddings {
  EmbeddingTable table;
  std::size_t coverage = 0;  // vocabulary tokens (excluding PAD/UNK) found in the file
};

// Text word vectors: "token v_1 ... v_d" per line, single-space separated.
// Rows not covered by the file (UNK included) are drawn uniform in
// [-0.1, 0.1] from `rng`; PAD stays zero. Throws FormatError with the line
// number if a line's value count is not d_model.
PretrainedEmbeddings load_pretrained_embeddings(std::istream& in, const Vocabulary& vocab,
                                                std::size_t d_model, Rng& rng);
PretrainedEmbeddings load_pretrained_embeddings(const std::filesystem::path& path,
                                                const Vocabulary& vocab,
                                                std::size_t d_model, Rng& rng);

// Token-id titles for every article, padded/truncated to max_title. A title
// with no tokens is stored as a single UNK so every article is encodable.
class NewsIndex {
 public:
  NewsIndex(const std::vector<NewsRecord>& news, const Vocabulary& vocab,
            std::size_t max_title);

  // Row of `news_id`, or npos when unknown.
  std::size_t find(std::string_view news_id) const;
  std::span<const TokenId> title(std::size_t row) const { return titles_.row(row); }
  const std::string& news_id(std::size_t row) const { return ids_[row]; }
  std::size_t size() const { return ids_.size(); }
  std::size_t max_title() const { return titles_.cols; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> rows_;
  TokenMatrix titles_;
};

// Token ids for one title: tokenize, map through vocab, pad/truncate.
std::vector<TokenId> encode_title(std::string_view title, const Vocabulary& vocab,
                                  std::size_t max_title);

struct InstanceStats {
  std::size_t impressions = 0;
  std::size_t instances = 0;
  std::size_t no_positive = 0;           // impressions without a click
  std::size_t no_negative = 0;           // impressions without a usable negative
  std::size_t missing_clicked = 0;       // clicked ids absent from news.tsv
  std::size_t missing_negative = 0;      // non-clicked ids absent from news.tsv
  std::size_t missing_history = 0;       // history ids absent from news.tsv
  std::size_t with_replacement = 0;      // instances that reused negatives
};

struct InstanceSet {
  std::vector<TrainingInstance> instances;
  InstanceStats stats;
};

// Click history rows, most recent last, keeping at most max_history.
std::vector<std::size_t> history_rows(const ImpressionRecord& record,
                                      const NewsIndex& news, std::size_t max_history,
                                      std::size_t* missing = nullptr);

// Padded history matrix + mask from NewsIndex rows (valid rows first).
std::pair<TokenMatrix, Mask> history_matrix(const std::vector<std::size_t>& rows,
                                            const NewsIndex& news,
                                            std::size_t max_history);

// One instance per clicked item: the positive at row 0 followed by K
// negatives sampled uniformly without replacement from the same impression's
// non-clicked items (with replacement when fewer than K exist). Sampling for
// each impression uses Rng::for_stream(seed, impression_id), so the output
// does not depend on record order.
InstanceSet make_training_instances(const std::vector<ImpressionRecord>& records,
                                    const NewsIndex& news, const ModelConfig& config,
                                    std::uint64_t seed);

// Impression prepared for scoring: everything refers to NewsIndex rows.
struct EvalImpression {
  std::string impression_id;
  std::vector<std::size_t> history;     // at most max_history, most recent last
  std::vector<std::size_t> candidates;
  std::vector<int> labels;
};

struct EvalSet {
  std::vector<EvalImpression> impressions;
  std::size_t missing_candidates = 0;
  std::size_t missing_history = 0;
};

EvalSet make_eval_impressions(const std::vector<ImpressionRecord>& records,
                              const NewsIndex& news, std::size_t max_history);

struct CategoryCount {
  std::string category;
  std::size_t count = 0;
  std::vector<std::pair<std::string, std::size_t>> subcategories;

  friend bool operator==(const CategoryCount&, const CategoryCount&) = default;
};

// Categories and their subcategories by count descending, then name ascending.
std::vector<CategoryCount> category_stats(const std::vector<NewsRecord>& news);

// "category<TAB>count<TAB>sub=count;sub=count" per category.
std::string format_category_stats(const std::vector<CategoryCount>& stats);

}  // namespace nram

#endif  // NRAM_DATA_H_

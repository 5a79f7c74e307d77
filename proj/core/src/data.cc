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

#include "nram/data.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "nram/errors.h"

namespace nram {
namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Space-separated list; empty string -> empty list, repeated spaces ignored.
std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  for (std::string_view part : split(s, ' ')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(std::string_view(line), line_no);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

}  // namespace

std::vector<NewsRecord> parse_news_tsv(std::istream& in) {
  std::vector<NewsRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_line(in, [&](std::string_view line, std::size_t line_no) {
    const auto cols = split(line, '\t');
    if (cols.size() != 8) {
      throw ParseError("news.tsv line " + std::to_string(line_no) +
                           ": expected 8 tab-separated columns, got " +
                           std::to_string(cols.size()),
                       line_no);
    }
    if (cols[0].empty()) {
      throw ParseError("news.tsv line " + std::to_string(line_no) + ": empty news_id",
                       line_no);
    }
    NewsRecord r{std::string(cols[0]), std::string(cols[1]), std::string(cols[2]),
                 std::string(cols[3]), std::string(cols[4]), std::string(cols[5]),
                 std::string(cols[6]), std::string(cols[7])};
    const auto [it, inserted] = seen.emplace(r.news_id, line_no);
    if (!inserted) {
      throw DuplicateIdError("news.tsv line " + std::to_string(line_no) +
                                 ": duplicate news_id " + r.news_id +
                                 " (first seen on line " + std::to_string(it->second) + ")",
                             line_no);
    }
    records.push_back(std::move(r));
  });
  return records;
}

std::vector<NewsRecord> parse_news_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_news_tsv(in);
}

std::string serialize_news_line(const NewsRecord& r) {
  return join({r.news_id, r.category, r.subcategory, r.title, r.abstract, r.url,
               r.title_entities, r.abstract_entities},
              '\t');
}

std::vector<ImpressionRecord> parse_behaviors_tsv(std::istream& in) {
  std::vector<ImpressionRecord> records;
  for_each_line(in, [&](std::string_view line, std::size_t line_no) {
    const auto cols = split(line, '\t');
    if (cols.size() != 5) {
      throw ParseError("behaviors.tsv line " + std::to_string(line_no) +
                           ": expected 5 tab-separated columns, got " +
                           std::to_string(cols.size()),
                       line_no);
    }
    ImpressionRecord r;
    r.impression_id = cols[0];
    r.user_id = cols[1];
    r.time = cols[2];
    for (std::string_view id : split_list(cols[3])) r.history.emplace_back(id);
    for (std::string_view token : split_list(cols[4])) {
      const std::size_t dash = token.rfind('-');
      const std::string_view suffix =
          dash == std::string_view::npos ? std::string_view{} : token.substr(dash + 1);
      if (dash == 0 || (suffix != "0" && suffix != "1")) {
        throw ParseError("behaviors.tsv line " + std::to_string(line_no) +
                             ": impression token '" + std::string(token) +
                             "' lacks a -0/-1 click suffix",
                         line_no);
      }
      r.impressions.push_back({std::string(token.substr(0, dash)), suffix == "1" ? 1 : 0});
    }
    records.push_back(std::move(r));
  });
  return records;
}

std::vector<ImpressionRecord> parse_behaviors_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_behaviors_tsv(in);
}

std::string serialize_behaviors_line(const ImpressionRecord& r) {
  std::vector<std::string> impressions;
  impressions.reserve(r.impressions.size());
  for (const auto& item : r.impressions) {
    impressions.push_back(item.news_id + (item.label ? "-1" : "-0"));
  }
  return join({r.impression_id, r.user_id, r.time, join(r.history, ' '),
               join(impressions, ' ')},
              '\t');
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                      (c >= 'A' && c <= 'Z');
    if (word) {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary::Vocabulary()
    : Vocabulary({std::string(kPadToken), std::string(kUnkToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::size_t min_count)
    : tokens_(std::move(tokens)), min_count_(min_count) {
  if (tokens_.size() < 2 || tokens_[kPadId] != kPadToken || tokens_[kUnkId] != kUnkToken) {
    throw ConfigError("vocabulary must start with " + std::string(kPadToken) + " and " +
                      std::string(kUnkToken));
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw ConfigError("vocabulary token '" + tokens_[i] + "' appears twice");
    }
  }
}

TokenId Vocabulary::id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open vocabulary for writing: " + path.string());
  out << "#min_count\t" << min_count_ << '\n';
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw IoError("failed writing vocabulary: " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t min_count = 1;
  std::vector<std::string> tokens;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && line.rfind("#min_count\t", 0) == 0) {
      min_count = std::stoul(line.substr(11));
      first = false;
      continue;
    }
    first = false;
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens), min_count);
}

Vocabulary build_vocabulary(const std::vector<NewsRecord>& news, std::size_t min_count) {
  if (min_count < 1) throw ConfigError("build_vocabulary: min_count must be >= 1");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& r : news) {
    for (auto& t : tokenize(r.title)) ++counts[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : counts) {
    if (count >= min_count && token != Vocabulary::kPadToken &&
        token != Vocabulary::kUnkToken) {
      kept.emplace_back(token, count);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens{std::string(Vocabulary::kPadToken),
                                  std::string(Vocabulary::kUnkToken)};
  for (auto& [token, count] : kept) tokens.push_back(std::move(token));
  return Vocabulary(std::move(tokens), min_count);
}

PretrainedEmbeddings load_pretrained_embeddings(std::istream& in, const Vocabulary& vocab,
                                                std::size_t d_model, Rng& rng) {
  PretrainedEmbeddings out{EmbeddingTable::random(vocab.size(), d_model, 0.1, rng), 0};
  std::vector<bool> covered(vocab.size(), false);
  std::vector<double> values;
  values.reserve(d_model);
  for_each_line(in, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split(line, ' ');
    // A trailing space is tolerated (some exporters emit one).
    std::size_t n = fields.size();
    if (n > 0 && fields.back().empty()) --n;
    if (n != d_model + 1) {
      throw FormatError("embeddings line " + std::to_string(line_no) + ": expected " +
                            std::to_string(d_model) + " values, got " +
                            std::to_string(n == 0 ? 0 : n - 1),
                        line_no);
    }
    values.clear();
    for (std::size_t i = 1; i < n; ++i) {
      double v = 0.0;
      const auto f = fields[i];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw FormatError("embeddings line " + std::to_string(line_no) +
                              ": malformed number '" + std::string(f) + "'",
                          line_no);
      }
      values.push_back(v);
    }
    const std::string_view token = fields[0];
    const TokenId id = vocab.id(token);
    if (id == kPadId || id == kUnkId || covered[static_cast<std::size_t>(id)]) return;
    covered[static_cast<std::size_t>(id)] = true;
    ++out.coverage;
    std::copy(values.begin(), values.end(),
              out.table.matrix.row(static_cast<std::size_t>(id)).begin());
  });
  return out;
}

PretrainedEmbeddings load_pretrained_embeddings(const std::filesystem::path& path,
                                                const Vocabulary& vocab,
                                                std::size_t d_model, Rng& rng) {
  auto in = open_input(path);
  return load_pretrained_embeddings(in, vocab, d_model, rng);
}

std::vector<TokenId> encode_title(std::string_view title, const Vocabulary& vocab,
                                  std::size_t max_title) {
  std::vector<TokenId> ids(max_title, kPadId);
  const auto tokens = tokenize(title);
  if (tokens.empty()) {
    if (max_title > 0) ids[0] = kUnkId;
    return ids;
  }
  for (std::size_t i = 0; i < std::min(max_title, tokens.size()); ++i) {
    ids[i] = vocab.id(tokens[i]);
  }
  return ids;
}

NewsIndex::NewsIndex(const std::vector<NewsRecord>& news, const Vocabulary& vocab,
                     std::size_t max_title)
    : titles_(news.size(), max_title) {
  if (max_title == 0) throw ConfigError("NewsIndex: max_title must be >= 1");
  ids_.reserve(news.size());
  for (std::size_t i = 0; i < news.size(); ++i) {
    ids_.push_back(news[i].news_id);
    rows_.emplace(news[i].news_id, i);
    const auto ids = encode_title(news[i].title, vocab, max_title);
    std::copy(ids.begin(), ids.end(), titles_.row(i).begin());
  }
}

std::size_t NewsIndex::find(std::string_view news_id) const {
  const auto it = rows_.find(std::string(news_id));
  return it == rows_.end() ? npos : it->second;
}

std::vector<std::size_t> history_rows(const ImpressionRecord& record,
                                      const NewsIndex& news, std::size_t max_history,
                                      std::size_t* missing) {
  std::vector<std::size_t> rows;
  for (const auto& id : record.history) {
    const std::size_t row = news.find(id);
    if (row == NewsIndex::npos) {
      if (missing) ++*missing;
      continue;
    }
    rows.push_back(row);
  }
  if (rows.size() > max_history) rows.erase(rows.begin(), rows.end() - max_history);
  return rows;
}

std::pair<TokenMatrix, Mask> history_matrix(const std::vector<std::size_t>& rows,
                                            const NewsIndex& news,
                                            std::size_t max_history) {
  TokenMatrix history(max_history, news.max_title());
  Mask mask(max_history, false);
  for (std::size_t i = 0; i < std::min(rows.size(), max_history); ++i) {
    const auto title = news.title(rows[i]);
    std::copy(title.begin(), title.end(), history.row(i).begin());
    mask[i] = true;
  }
  return {std::move(history), std::move(mask)};
}

InstanceSet make_training_instances(const std::vector<ImpressionRecord>& records,
                                    const NewsIndex& news, const ModelConfig& config,
                                    std::uint64_t seed) {
  config.validate();
  if (news.max_title() != config.max_title) {
    throw ConfigError("make_training_instances: news index uses max_title " +
                      std::to_string(news.max_title()) + " but config says " +
                      std::to_string(config.max_title));
  }
  InstanceSet out;
  const std::size_t k = config.neg_k;
  for (const auto& record : records) {
    ++out.stats.impressions;
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    bool any_click = false;
    for (const auto& item : record.impressions) {
      any_click |= item.label == 1;
      const std::size_t row = news.find(item.news_id);
      if (row == NewsIndex::npos) {
        ++(item.label ? out.stats.missing_clicked : out.stats.missing_negative);
        continue;
      }
      (item.label ? positives : negatives).push_back(row);
    }
    if (!any_click) {
      ++out.stats.no_positive;
      continue;
    }
    if (negatives.empty()) {
      ++out.stats.no_negative;
      continue;
    }
    if (positives.empty()) continue;

    const auto [history, history_mask] = history_matrix(
        history_rows(record, news, config.max_history, &out.stats.missing_history), news,
        config.max_history);

    Rng rng = Rng::for_stream(seed, record.impression_id);
    for (const std::size_t positive : positives) {
      std::vector<std::size_t> chosen;
      chosen.reserve(k);
      if (negatives.size() >= k) {
        // Partial Fisher-Yates: the first k slots become a uniform k-subset.
        std::vector<std::size_t> pool = negatives;
        for (std::size_t i = 0; i < k; ++i) {
          const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
          std::swap(pool[i], pool[j]);
          chosen.push_back(pool[i]);
        }
      } else {
        for (std::size_t i = 0; i < k; ++i) {
          chosen.push_back(negatives[rng.below(negatives.size())]);
        }
        ++out.stats.with_replacement;
      }

      TrainingInstance inst;
      inst.history = history;
      inst.history_mask = history_mask;
      inst.candidates = TokenMatrix(k + 1, config.max_title);
      const auto pos_title = news.title(positive);
      std::copy(pos_title.begin(), pos_title.end(), inst.candidates.row(0).begin());
      for (std::size_t i = 0; i < k; ++i) {
        const auto title = news.title(chosen[i]);
        std::copy(title.begin(), title.end(), inst.candidates.row(i + 1).begin());
      }
      out.instances.push_back(std::move(inst));
      ++out.stats.instances;
    }
  }
  return out;
}

EvalSet make_eval_impressions(const std::vector<ImpressionRecord>& records,
                              const NewsIndex& news, std::size_t max_history) {
  EvalSet out;
  out.impressions.reserve(records.size());
  for (const auto& record : records) {
    EvalImpression e;
    e.impression_id = record.impression_id;
    e.history = history_rows(record, news, max_history, &out.missing_history);
    for (const auto& item : record.impressions) {
      const std::size_t row = news.find(item.news_id);
      if (row == NewsIndex::npos) {
        ++out.missing_candidates;
        continue;
      }
      e.candidates.push_back(row);
      e.labels.push_back(item.label);
    }
    out.impressions.push_back(std::move(e));
  }
  return out;
}

std::vector<CategoryCount> category_stats(const std::vector<NewsRecord>& news) {
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& r : news) ++counts[r.category][r.subcategory];

  std::vector<CategoryCount> out;
  for (auto& [category, subs] : counts) {
    CategoryCount c{category, 0, {}};
    for (auto& [sub, n] : subs) {
      c.count += n;
      c.subcategories.emplace_back(sub, n);
    }
    std::stable_sort(c.subcategories.begin(), c.subcategories.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    out.push_back(std::move(c));
  }
  // std::map iteration is name-ascending, so a stable sort on count leaves
  // equal counts in name order.
  std::stable_sort(out.begin(), out.end(), [](const CategoryCount& a, const CategoryCount& b) {
    return a.count > b.count;
  });
  return out;
}

std::string format_category_stats(const std::vector<CategoryCount>& stats) {
  std::ostringstream os;
  for (const auto& c : stats) {
    os << c.category << '\t' << c.count << '\t';
    for (std::size_t i = 0; i < c.subcategories.size(); ++i) {
      if (i) os << ';';
      os << c.subcategories[i].first << '=' << c.subcategories[i].second;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace nram

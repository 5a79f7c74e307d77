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

#include "cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "nram/checkpoint.h"
#include "nram/data.h"
#include "nram/errors.h"
#include "nram/metrics.h"
#include "nram/model.h"
#include "nram/trainer.h"

namespace nram::cli {
namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (unknown or missing flag, invalid configuration)\n"
    "  3  file cannot be opened, read or written\n"
    "  4  malformed input file (news, behaviors, embeddings, vocabulary)\n"
    "  5  training diverged (non-finite loss)\n"
    "  6  checkpoint rejected (bad magic, version mismatch, checksum failure)\n"
    "  7  data mismatch (vocabulary vs checkpoint, unknown news id)\n"
    "  8  no impression has both a click and a non-click\n"
    "Errors are reported on stderr as one line: error: <kind>: <message>";

struct Options {
  std::string news;
  std::string behaviors_train;
  std::string behaviors_valid;
  std::string behaviors_test;
  std::string embeddings;
  std::string checkpoint;
  std::string out;
  std::string user_history;
  std::string candidates;
  std::uint64_t seed = 42;
  std::size_t min_count = 1;
  std::size_t top = 0;
  ModelConfig model;
  TrainConfig train;
};

std::string vocab_path(const std::string& checkpoint) { return checkpoint + ".vocab"; }

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10f", v);
  return buf;
}

void echo(std::ostream& err, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) err << "config: " << k << '=' << v << '\n';
}

void echo_model(std::ostream& err, const ModelConfig& c) {
  echo(err, {{"d_model", std::to_string(c.d_model)},
             {"heads", std::to_string(c.heads)},
             {"d_attn", std::to_string(c.d_attn)},
             {"max_title", std::to_string(c.max_title)},
             {"max_history", std::to_string(c.max_history)},
             {"neg_k", std::to_string(c.neg_k)},
             {"seed", std::to_string(c.seed)}});
}

// Prefixes parse errors with the offending file.
template <typename Fn>
auto reading(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line());
  }
}

std::vector<NewsRecord> read_news(const std::string& path) {
  return reading(path, [&] { return parse_news_tsv(path); });
}

std::vector<ImpressionRecord> read_behaviors(const std::string& path) {
  return reading(path, [&] { return parse_behaviors_tsv(path); });
}

Vocabulary read_vocabulary(const std::string& path) {
  try {
    return Vocabulary::load(path);
  } catch (const ConfigError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

// Comma/whitespace separated ids, or "@file" to read them from a file.
std::vector<std::string> split_ids(const std::string& arg) {
  std::string text = arg;
  if (!arg.empty() && arg[0] == '@') {
    std::ifstream in(arg.substr(1));
    if (!in) throw IoError("cannot open " + arg.substr(1));
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream is(text);
  std::vector<std::string> ids;
  for (std::string id; is >> id;) ids.push_back(id);
  return ids;
}

struct LoadedModel {
  Checkpoint checkpoint;
  Vocabulary vocab;
};

LoadedModel load_model(const std::string& path) {
  LoadedModel m{load_checkpoint(path), read_vocabulary(vocab_path(path))};
  const std::size_t rows = m.checkpoint.params.embedding.vocab_size();
  if (m.vocab.size() != rows) {
    throw VocabularyMismatchError(vocab_path(path) + " has " + std::to_string(m.vocab.size()) +
                                  " tokens but the checkpoint embedding has " +
                                  std::to_string(rows) + " rows");
  }
  return m;
}

int cmd_train(Options o, std::ostream& out, std::ostream& err) {
  o.model.seed = o.seed;
  o.train.seed = o.seed;
  if (o.out.empty()) o.out = o.checkpoint + ".history";
  echo(err, {{"command", "train"},
             {"news", o.news},
             {"behaviors_train", o.behaviors_train},
             {"behaviors_valid", o.behaviors_valid},
             {"embeddings", o.embeddings},
             {"checkpoint", o.checkpoint},
             {"out", o.out},
             {"min_count", std::to_string(o.min_count)}});
  echo_model(err, o.model);
  echo(err, {{"lr", fixed(o.train.learning_rate)},
             {"beta1", fixed(o.train.beta1)},
             {"beta2", fixed(o.train.beta2)},
             {"eps_opt", std::to_string(o.train.eps_opt)},
             {"batch_size", std::to_string(o.train.batch_size)},
             {"epochs", std::to_string(o.train.max_epochs)},
             {"patience", std::to_string(o.train.patience)},
             {"clip_norm", fixed(o.train.clip_norm)},
             {"threads", std::to_string(o.train.threads)},
             {"deterministic", o.train.deterministic ? "true" : "false"}});
  o.model.validate();
  o.train.validate();

  const auto news = read_news(o.news);
  const auto train_records = read_behaviors(o.behaviors_train);
  const auto valid_records = read_behaviors(o.behaviors_valid);

  const Vocabulary vocab = build_vocabulary(news, o.min_count);
  Rng rng(o.seed);
  ModelParams params = ModelParams::initialize(o.model, vocab.size(), rng);
  if (!o.embeddings.empty()) {
    Rng embed_rng = Rng::for_stream(o.seed, "embeddings");
    auto loaded = reading(o.embeddings, [&] {
      return load_pretrained_embeddings(o.embeddings, vocab, o.model.d_model, embed_rng);
    });
    params.embedding = std::move(loaded.table);
    err << "embeddings: " << loaded.coverage << " of " << vocab.size() - 2
        << " vocabulary tokens covered\n";
  }

  const NewsIndex index(news, vocab, o.model.max_title);
  const InstanceSet set = make_training_instances(train_records, index, o.model, o.seed);
  const EvalSet valid = make_eval_impressions(valid_records, index, o.model.max_history);
  const InstanceStats& s = set.stats;
  err << "data: news=" << news.size() << " vocab=" << vocab.size()
      << " instances=" << s.instances << " impressions=" << s.impressions
      << " no_positive=" << s.no_positive << " no_negative=" << s.no_negative
      << " missing_clicked=" << s.missing_clicked << " missing_negative=" << s.missing_negative
      << " missing_history=" << s.missing_history << " with_replacement=" << s.with_replacement
      << " valid_impressions=" << valid.impressions.size()
      << " valid_missing_candidates=" << valid.missing_candidates << '\n';

  std::ofstream history = open_output(o.out);
  const TrainResult result =
      train(std::move(params), set.instances, index, valid, o.train, [&](const EpochRecord& r) {
        const std::string line = format_epoch_line(r);
        history << line << '\n';
        history.flush();
        err << line << '\n';
      });
  if (!history) throw IoError("failed writing " + o.out);

  save_checkpoint(result.best_params, o.model, o.checkpoint);
  vocab.save(vocab_path(o.checkpoint));
  out << "best_epoch=" << result.history.best_epoch << '\n'
      << "best_auc=" << fixed(result.history.best_auc) << '\n'
      << "epochs=" << result.history.epochs.size() << '\n';
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  const std::string behaviors = o.behaviors_test.empty() ? o.behaviors_valid : o.behaviors_test;
  echo(err, {{"command", "eval"},
             {"news", o.news},
             {"behaviors", behaviors},
             {"checkpoint", o.checkpoint},
             {"out", o.out},
             {"threads", std::to_string(o.train.threads)}});
  if (behaviors.empty()) throw UsageError("eval needs --behaviors-test or --behaviors-valid");
  if (o.train.threads == 0) throw UsageError("--threads must be >= 1");

  const LoadedModel m = load_model(o.checkpoint);
  echo_model(err, m.checkpoint.config);
  const auto news = read_news(o.news);
  const auto records = read_behaviors(behaviors);
  const NewsIndex index(news, m.vocab, m.checkpoint.config.max_title);
  const EvalSet set = make_eval_impressions(records, index, m.checkpoint.config.max_history);
  err << "data: impressions=" << set.impressions.size()
      << " missing_candidates=" << set.missing_candidates
      << " missing_history=" << set.missing_history << '\n';

  const std::string report =
      format_report(evaluate(m.checkpoint.params, index, set, o.train.threads));
  if (!o.out.empty()) {
    std::ofstream f = open_output(o.out);
    f << report;
    if (!f) throw IoError("failed writing " + o.out);
  }
  out << report;
  return kOk;
}

int cmd_rank(const Options& o, std::ostream& out, std::ostream& err) {
  echo(err, {{"command", "rank"},
             {"news", o.news},
             {"checkpoint", o.checkpoint},
             {"user_history", o.user_history},
             {"candidates", o.candidates},
             {"top", std::to_string(o.top)}});
  const auto history_ids = split_ids(o.user_history);
  const auto candidate_ids = split_ids(o.candidates);
  if (candidate_ids.empty()) throw UsageError("rank needs at least one candidate");

  const LoadedModel m = load_model(o.checkpoint);
  echo_model(err, m.checkpoint.config);
  const ModelConfig& c = m.checkpoint.config;
  const auto news = read_news(o.news);
  const NewsIndex index(news, m.vocab, c.max_title);
  auto row_of = [&](const std::string& id) {
    const std::size_t row = index.find(id);
    if (row == NewsIndex::npos) throw UnknownNewsIdError("unknown news id " + id);
    return row;
  };

  std::vector<std::size_t> rows;
  for (const auto& id : history_ids) rows.push_back(row_of(id));
  if (rows.size() > c.max_history) {
    rows.erase(rows.begin(), rows.end() - static_cast<std::ptrdiff_t>(c.max_history));
  }
  const auto [history, mask] = history_matrix(rows, index, c.max_history);

  std::vector<std::vector<TokenId>> titles;
  for (const auto& id : candidate_ids) {
    const auto t = index.title(row_of(id));
    titles.emplace_back(t.begin(), t.end());
  }
  const auto ranked = rank_candidates(history, mask, titles, m.checkpoint.params);
  const std::size_t shown = o.top == 0 ? ranked.size() : std::min(o.top, ranked.size());
  for (std::size_t i = 0; i < shown; ++i) {
    out << candidate_ids[ranked[i].index] << '\t' << fixed(ranked[i].score) << '\n';
  }
  return kOk;
}

int cmd_stats(const Options& o, std::ostream& out, std::ostream& err) {
  echo(err, {{"command", "stats"}, {"news", o.news}});
  out << format_category_stats(category_stats(read_news(o.news)));
  return kOk;
}

int fail(std::ostream& err, const char* kind, const std::string& what, int code) {
  err << "error: " << kind << ": " << what << '\n';
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Attention-based news recommender for MIND-format click logs."};
  app.name("nram");
  app.require_subcommand(1, 1);
  app.footer(kExitCodes);
  app.set_version_flag("--version", "nram 0.1.0");
  app.option_defaults()->always_capture_default();

  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint.");
  auto* eval = app.add_subcommand("eval", "Report AUC, MRR and nDCG for a checkpoint.");
  auto* rank = app.add_subcommand("rank", "Rank candidate articles for one user history.");
  auto* stats = app.add_subcommand("stats", "Print the category histogram of a news file.");
  for (auto* sub : {train, eval, rank, stats}) {
    sub->footer(kExitCodes);
    sub->add_option("--news", o.news, "news.tsv")->required();
  }

  train->add_option("--behaviors-train", o.behaviors_train, "Training behaviors.tsv")
      ->required();
  train->add_option("--behaviors-valid", o.behaviors_valid,
                    "Validation behaviors.tsv (early stopping)")
      ->required();
  train->add_option("--checkpoint", o.checkpoint,
                    "Output checkpoint; the vocabulary goes to <checkpoint>.vocab")
      ->required();
  train->add_option("--out", o.out, "Per-epoch history file (default <checkpoint>.history)");
  train->add_option("--embeddings", o.embeddings,
                    "Text word vectors: token followed by d-model values per line");
  train->add_option("--seed", o.seed, "Seed for initialization, sampling and shuffling");
  train->add_option("--d-model", o.model.d_model, "Embedding and hidden width");
  train->add_option("--heads", o.model.heads, "Attention heads (must divide --d-model)");
  train->add_option("--d-attn", o.model.d_attn, "Additive attention hidden width");
  train->add_option("--max-title", o.model.max_title, "Title tokens kept");
  train->add_option("--max-history", o.model.max_history, "Most recent clicks kept");
  train->add_option("--neg-k", o.model.neg_k, "Negatives per clicked item");
  train->add_option("--lr", o.train.learning_rate, "Adam learning rate");
  train->add_option("--batch-size", o.train.batch_size, "Instances per update");
  train->add_option("--epochs", o.train.max_epochs, "Maximum epochs");
  train->add_option("--patience", o.train.patience,
                    "Stop after this many epochs without a validation AUC gain");
  train->add_option("--clip-norm", o.train.clip_norm, "Global gradient norm cap (0 = off)");
  train->add_option("--min-count", o.min_count, "Minimum title-token frequency");
  train->add_option("--threads", o.train.threads, "Worker threads");
  train->add_flag("--deterministic", o.train.deterministic,
                  "Serial gradient reduction, on by default; --deterministic=false lets "
                  "--threads > 1 reduce in parallel");

  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint written by train")->required();
  eval->add_option("--behaviors-test", o.behaviors_test, "Behaviors to evaluate");
  eval->add_option("--behaviors-valid", o.behaviors_valid,
                   "Used when --behaviors-test is absent");
  eval->add_option("--out", o.out, "Also write the report to this file");
  eval->add_option("--threads", o.train.threads, "Worker threads");

  rank->add_option("--checkpoint", o.checkpoint, "Checkpoint written by train")->required();
  rank->add_option("--user-history", o.user_history,
                   "Clicked news ids, oldest first, comma or space separated; @file reads "
                   "them from a file; empty means a cold-start user");
  rank->add_option("--candidates", o.candidates,
                   "Candidate news ids, comma or space separated, or @file")
      ->required();
  rank->add_option("--top", o.top, "Print at most this many lines (0 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return fail(err, "usage", e.what(), kUsage);
  }

  try {
    if (*train) return cmd_train(o, out, err);
    if (*eval) return cmd_eval(o, out, err);
    if (*rank) return cmd_rank(o, out, err);
    return cmd_stats(o, out, err);
  } catch (const DivergedTrainingError& e) {
    return fail(err, "diverged", e.what(), kDiverged);
  } catch (const CheckpointError& e) {
    return fail(err, "checkpoint", e.what(), kCheckpoint);
  } catch (const VocabularyMismatchError& e) {
    return fail(err, "mismatch", e.what(), kMismatch);
  } catch (const UnknownNewsIdError& e) {
    return fail(err, "mismatch", e.what(), kMismatch);
  } catch (const EmptyReportError& e) {
    return fail(err, "empty", e.what(), kNothingToScore);
  } catch (const ParseError& e) {
    return fail(err, "parse", e.what(), kParse);
  } catch (const IoError& e) {
    return fail(err, "io", e.what(), kIo);
  } catch (const ConfigError& e) {
    return fail(err, "usage", e.what(), kUsage);
  } catch (const UsageError& e) {
    return fail(err, "usage", e.what(), kUsage);
  } catch (const std::exception& e) {
    return fail(err, "internal", e.what(), kInternal);
  }
}

}  // namespace nram::cli

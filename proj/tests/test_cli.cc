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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "doctest.h"
#include "nram/data.h"
#include "support/synthetic.h"

namespace fs = std::filesystem;
using namespace nram;

namespace {

const fs::path kFixtures = NRAM_FIXTURE_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "nram");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Synthetic corpus written as MIND files in a fresh directory.
struct Workspace {
  fs::path dir;
  std::string news, train, valid;

  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    testing::SyntheticOptions o;
    o.train_impressions = 80;
    o.valid_impressions = 40;
    const auto corpus = testing::make_synthetic_corpus(o);
    news = (dir / "news.tsv").string();
    train = (dir / "train.tsv").string();
    valid = (dir / "valid.tsv").string();
    std::ofstream n(news), t(train), v(valid);
    for (const auto& r : corpus.news) n << serialize_news_line(r) << '\n';
    for (const auto& r : corpus.train) t << serialize_behaviors_line(r) << '\n';
    for (const auto& r : corpus.valid) v << serialize_behaviors_line(r) << '\n';
  }
  ~Workspace() { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  Result train_model(const std::string& checkpoint, const std::string& seed = "5") const {
    return run({"train", "--news", news, "--behaviors-train", train, "--behaviors-valid", valid,
                "--checkpoint", checkpoint, "--seed", seed, "--d-model", "8", "--heads", "2",
                "--d-attn", "4", "--max-title", "4", "--max-history", "5", "--neg-k", "2",
                "--lr", "0.01", "--batch-size", "16", "--epochs", "2"});
  }
};

}  // namespace

TEST_CASE("help documents every flag and exit code") {
  std::string all;
  for (const char* sub : {"train", "eval", "rank", "stats"}) {
    const Result r = run({sub, "--help"});
    CHECK(r.code == 0);
    all += r.out;
  }
  for (const char* flag :
       {"--news", "--behaviors-train", "--behaviors-valid", "--behaviors-test", "--embeddings",
        "--checkpoint", "--out", "--seed", "--d-model", "--heads", "--d-attn", "--max-title",
        "--max-history", "--neg-k", "--lr", "--batch-size", "--epochs", "--patience",
        "--min-count", "--top", "--threads", "--deterministic"}) {
    CHECK_MESSAGE(all.find(flag) != std::string::npos, flag);
  }
  CHECK(all.find("[42]") != std::string::npos);
  for (int code = 0; code <= 8; ++code) {
    CHECK(all.find("  " + std::to_string(code) + "  ") != std::string::npos);
  }
}

TEST_CASE("usage errors") {
  const Result unknown = run({"stats", "--news", "x", "--bogus"});
  CHECK(unknown.code == cli::kUsage);
  CHECK(unknown.err.rfind("error: usage: ", 0) == 0);
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"stats"}).code == cli::kUsage);
}

TEST_CASE("stats") {
  SUBCASE("golden fixture") {
    const Result r = run({"stats", "--news", (kFixtures / "news.tsv").string()});
    CHECK(r.code == 0);
    CHECK(r.out == slurp(kFixtures / "news.stats"));
    CHECK(r.err.find("config: command=stats") != std::string::npos);
  }
  SUBCASE("counts sum to the input line count") {
    Workspace ws("nram_cli_stats");
    const Result r = run({"stats", "--news", ws.news});
    std::size_t total = 0;
    for (const auto& l : lines(r.out)) total += std::stoul(l.substr(l.find('\t') + 1));
    CHECK(total == lines(slurp(ws.news)).size());
  }
  SUBCASE("empty file") {
    const auto empty = (fs::temp_directory_path() / "nram_cli_empty.tsv").string();
    std::ofstream(empty).close();
    const Result r = run({"stats", "--news", empty});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    fs::remove(empty);
  }
  SUBCASE("missing file names the path") {
    const Result r = run({"stats", "--news", "/nonexistent/news.tsv"});
    CHECK(r.code == cli::kIo);
    CHECK(r.err.find("/nonexistent/news.tsv") != std::string::npos);
  }
  SUBCASE("parse error carries the line") {
    const Result r = run({"stats", "--news", (kFixtures / "news_bad_columns.tsv").string()});
    CHECK(r.code == cli::kParse);
    CHECK(r.err.find("line 1") != std::string::npos);
  }
}

TEST_CASE("train, eval and rank") {
  Workspace ws("nram_cli_pipeline");
  const std::string ckpt = ws.path("model.bin");
  const Result trained = ws.train_model(ckpt);
  REQUIRE_MESSAGE(trained.code == 0, trained.err);

  SUBCASE("train writes checkpoint, vocabulary and history") {
    CHECK(fs::exists(ckpt));
    CHECK(fs::exists(ckpt + ".vocab"));
    const auto history = lines(slurp(ckpt + ".history"));
    CHECK(history.size() >= 1);
    CHECK(history[0].rfind("epoch=1\tloss=", 0) == 0);
    CHECK(trained.err.find("config: seed=5") != std::string::npos);
    CHECK(trained.err.find("config: lr=0.0100000000") != std::string::npos);
    CHECK(trained.out.find("best_epoch=") != std::string::npos);
  }
  SUBCASE("same seed gives byte-identical checkpoints") {
    const std::string again = ws.path("again.bin");
    REQUIRE(ws.train_model(again).code == 0);
    CHECK(slurp(ckpt) == slurp(again));
    const std::string other = ws.path("other.bin");
    REQUIRE(ws.train_model(other, "6").code == 0);
    CHECK(slurp(ckpt) != slurp(other));
  }
  SUBCASE("missing news file") {
    const Result r = run({"train", "--news", ws.path("nope.tsv"), "--behaviors-train", ws.train,
                          "--behaviors-valid", ws.valid, "--checkpoint", ws.path("x.bin")});
    CHECK(r.code == cli::kIo);
    CHECK(r.err.find(ws.path("nope.tsv")) != std::string::npos);
  }
  SUBCASE("invalid model configuration") {
    const Result r = run({"train", "--news", ws.news, "--behaviors-train", ws.train,
                          "--behaviors-valid", ws.valid, "--checkpoint", ws.path("x.bin"),
                          "--d-model", "10", "--heads", "3"});
    CHECK(r.code == cli::kUsage);
  }
  SUBCASE("eval report") {
    const std::string report = ws.path("report.txt");
    const Result r = run({"eval", "--news", ws.news, "--behaviors-test", ws.train,
                          "--checkpoint", ckpt, "--out", report});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto kv = lines(r.out);
    REQUIRE(kv.size() == 6);
    const std::vector<std::string> keys{"auc", "mrr", "ndcg@5", "ndcg@10", "impressions",
                                        "skipped"};
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(kv[i].substr(0, kv[i].find('=')) == keys[i]);
      if (i < 4) {
        const double v = std::stod(kv[i].substr(kv[i].find('=') + 1));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
    CHECK(slurp(report) == r.out);
    const Result fallback =
        run({"eval", "--news", ws.news, "--behaviors-valid", ws.train, "--checkpoint", ckpt});
    CHECK(fallback.out == r.out);
  }
  SUBCASE("eval needs behaviors") {
    CHECK(run({"eval", "--news", ws.news, "--checkpoint", ckpt}).code == cli::kUsage);
  }
  SUBCASE("corrupted checkpoint") {
    std::string bytes = slurp(ckpt);
    bytes[bytes.size() / 2] ^= 0x01;
    std::ofstream(ckpt, std::ios::binary) << bytes;
    const Result r =
        run({"eval", "--news", ws.news, "--behaviors-test", ws.valid, "--checkpoint", ckpt});
    CHECK(r.code == cli::kCheckpoint);
    CHECK(r.err.find("checksum") != std::string::npos);
  }
  SUBCASE("vocabulary that does not match the checkpoint") {
    std::ofstream(ckpt + ".vocab") << "#min_count\t1\n[PAD]\n[UNK]\nextra\n";
    const Result r =
        run({"eval", "--news", ws.news, "--behaviors-test", ws.valid, "--checkpoint", ckpt});
    CHECK(r.code == cli::kMismatch);
    CHECK(r.err.find("\nerror: mismatch: ") != std::string::npos);
  }
  SUBCASE("rank one candidate") {
    const Result r = run({"rank", "--news", ws.news, "--checkpoint", ckpt, "--user-history",
                          "N2,N4", "--candidates", "N7"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto l = lines(r.out);
    REQUIRE(l.size() == 1);
    CHECK(l[0].rfind("N7\t", 0) == 0);
  }
  SUBCASE("rank --top 3 of 10") {
    const Result r = run({"rank", "--news", ws.news, "--checkpoint", ckpt, "--user-history",
                          "N2 N4", "--candidates", "N1,N2,N3,N4,N5,N6,N7,N8,N9,N10", "--top",
                          "3"});
    REQUIRE(r.code == 0);
    const auto l = lines(r.out);
    REQUIRE(l.size() == 3);
    double previous = 1e300;
    for (const auto& line : l) {
      const double s = std::stod(line.substr(line.find('\t') + 1));
      CHECK(s <= previous);
      previous = s;
    }
  }
  SUBCASE("rank reads ids from files") {
    std::ofstream(ws.path("hist.txt")) << "N2\nN4\n";
    std::ofstream(ws.path("cands.txt")) << "N1 N3\n";
    const Result from_files = run({"rank", "--news", ws.news, "--checkpoint", ckpt,
                                   "--user-history", "@" + ws.path("hist.txt"), "--candidates",
                                   "@" + ws.path("cands.txt")});
    const Result inline_ids = run({"rank", "--news", ws.news, "--checkpoint", ckpt,
                                   "--user-history", "N2,N4", "--candidates", "N1,N3"});
    CHECK(from_files.code == 0);
    CHECK(from_files.out == inline_ids.out);
  }
  SUBCASE("cold-start user keeps input order with zero scores") {
    const Result r =
        run({"rank", "--news", ws.news, "--checkpoint", ckpt, "--candidates", "N5,N2,N9"});
    REQUIRE(r.code == 0);
    CHECK(r.out == "N5\t0.0000000000\nN2\t0.0000000000\nN9\t0.0000000000\n");
  }
  SUBCASE("unknown id is named") {
    const Result r = run({"rank", "--news", ws.news, "--checkpoint", ckpt, "--user-history",
                          "N2", "--candidates", "N1,N999"});
    CHECK(r.code == cli::kMismatch);
    CHECK(r.err.find("N999") != std::string::npos);
  }
}

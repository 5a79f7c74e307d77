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

#include "nram/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "nram/errors.h"
#include "nram/rng.h"

namespace nram {
namespace {

constexpr char kMagic[4] = {'N', 'R', 'A', 'M'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 7 * 8;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& in, std::size_t end) : in_(in), end_(end) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{in_[pos_++]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t position() const { return pos_; }
  void seek(std::size_t pos) { pos_ = pos; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > end_) throw CheckpointError("checkpoint payload ends unexpectedly");
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint64_t checksum(const std::vector<std::uint8_t>& bytes, std::size_t n) {
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), n));
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params,
                                               const ModelConfig& config) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  for (std::uint64_t v : {std::uint64_t{config.d_model}, std::uint64_t{config.heads},
                          std::uint64_t{config.d_attn}, std::uint64_t{config.max_title},
                          std::uint64_t{config.max_history}, std::uint64_t{config.neg_k},
                          config.seed}) {
    w.u64(v);
  }
  for (const Tensor* t : params.tensors()) {
    w.u32(static_cast<std::uint32_t>(t->rank()));
    for (std::size_t e : t->shape()) w.u64(e);
    for (double v : t->data()) w.f64(v);
  }
  const std::uint64_t sum = checksum(w.buffer(), w.buffer().size());
  w.u64(sum);
  return std::move(w.buffer());
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw BadMagicError("checkpoint: missing NRAM magic bytes");
  }
  if (bytes.size() < kHeaderBytes + 8) {
    throw ChecksumError("checkpoint: file truncated (" + std::to_string(bytes.size()) +
                        " bytes)");
  }
  Reader header(bytes, bytes.size());
  header.seek(sizeof(kMagic));
  const std::uint32_t version = header.u32();
  if (version != kCheckpointVersion) {
    throw VersionMismatchError("checkpoint: format version " + std::to_string(version) +
                               ", expected " + std::to_string(kCheckpointVersion));
  }

  const std::size_t payload_end = bytes.size() - 8;
  Reader trailer(bytes, bytes.size());
  trailer.seek(payload_end);
  const std::uint64_t stored = trailer.u64();
  if (stored != checksum(bytes, payload_end)) {
    throw ChecksumError("checkpoint: checksum mismatch (file truncated or corrupted)");
  }

  Reader r(bytes, payload_end);
  r.seek(sizeof(kMagic) + 4);
  ModelConfig config;
  config.d_model = r.u64();
  config.heads = r.u64();
  config.d_attn = r.u64();
  config.max_title = r.u64();
  config.max_history = r.u64();
  config.neg_k = r.u64();
  config.seed = r.u64();
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint: invalid stored config: ") + e.what());
  }

  // The embedding extent fixes the vocabulary size; peek at it first.
  const std::size_t tensors_start = r.position();
  if (r.u32() != 2) throw CheckpointError("checkpoint: embedding tensor must be rank 2");
  const std::size_t vocab_size = r.u64();
  r.seek(tensors_start);

  Checkpoint ck{config, ModelParams::zeros(config, vocab_size)};
  std::size_t index = 0;
  for (Tensor* t : ck.params.tensors()) {
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) e = r.u64();
    if (shape != t->shape()) {
      throw CheckpointError("checkpoint: tensor " + std::to_string(index) +
                            " has unexpected shape");
    }
    for (double& v : t->data()) v = r.f64();
    ++index;
  }
  if (r.position() != payload_end) {
    throw CheckpointError("checkpoint: trailing bytes after last tensor");
  }
  return ck;
}

void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(params, config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace nram

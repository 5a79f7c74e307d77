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

#ifndef NRAM_CHECKPOINT_H_
#define NRAM_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nram/model.h"

namespace nram {

// Binary checkpoint layout (all integers little-endian):
//
//   "NRAM"                       4 bytes magic
//   version                      u32 (kCheckpointVersion)
//   d_model, heads, d_attn,
//   max_title, max_history,
//   neg_k, seed                  7 x u64
//   per tensor, in ModelParams::tensors() order:
//     rank                       u32
//     extents                    rank x u64
//     values                     IEEE-754 binary64, little-endian
//   checksum                     u64 FNV-1a over every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params,
                                               const ModelConfig& config);

// Throws BadMagicError, VersionMismatchError, ChecksumError (also covers
// truncation), or CheckpointError for structurally invalid payloads.
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nram

#endif  // NRAM_CHECKPOINT_H_

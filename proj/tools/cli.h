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

// The `nram` command line: train, eval, rank, stats.
#ifndef NRAM_TOOLS_CLI_H_
#define NRAM_TOOLS_CLI_H_

#include <ostream>

namespace nram::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,       // anything not listed below
  kUsage = 2,          // bad flags or invalid configuration
  kIo = 3,             // missing or unreadable/unwritable file
  kParse = 4,          // malformed news/behaviors/embeddings/vocabulary
  kDiverged = 5,       // non-finite training loss
  kCheckpoint = 6,     // bad magic, version mismatch, checksum failure
  kMismatch = 7,       // vocabulary/checkpoint mismatch or unknown news id
  kNothingToScore = 8  // no impression with both a click and a non-click
};

// Runs one invocation. Results go to `out`; the resolved configuration,
// progress and "error: <kind>: <message>" lines go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nram::cli

#endif  // NRAM_TOOLS_CLI_H_

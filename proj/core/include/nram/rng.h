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

#ifndef NRAM_RNG_H_
#define NRAM_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace nram {

// Seeded generator with a portable draw sequence.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard *distributions* are implementation-defined, so every
// conversion to doubles or bounded integers is done here instead:
//   uniform()  = (next_u64() >> 11) * 2^-53, in [0, 1)
//   below(n)   = rejection sampling on next_u64() against the largest
//                multiple of n, so no modulo bias
// Not thread-safe; give each thread its own Rng.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream keyed on (seed, key); used so per-impression sampling
  // does not depend on processing order.
  static Rng for_stream(std::uint64_t seed, std::string_view key);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace nram

#endif  // NRAM_RNG_H_

// Copyright 2026 The miaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIAUDIT_SEEDING_H_
#define MIAUDIT_SEEDING_H_

#include <cstdint>
#include <random>

#include "absl/strings/string_view.h"

namespace miaudit {

// Every random draw in the toolkit comes from this engine. Distinct purposes
// get independent streams through DeriveSeed.
using Rng = std::mt19937_64;

// Hashes (seed, purpose) into a fresh 64-bit seed. Stable across runs and
// platforms.
uint64_t DeriveSeed(uint64_t seed, absl::string_view purpose);
uint64_t DeriveSeed(uint64_t seed, absl::string_view purpose, uint64_t index);

// Uniform double in [0, 1) built from the top 53 bits of one engine draw, so
// the value does not depend on the standard library's distribution code.
double UniformUnit(Rng& rng);

// Standard normal via Box-Muller on UniformUnit draws. Same rationale.
double StandardNormal(Rng& rng);

// Uniform integer in [lo, hi] (inclusive) using rejection sampling.
int64_t UniformInt(Rng& rng, int64_t lo, int64_t hi);

// Fisher-Yates shuffle driven by UniformInt.
template <typename T>
void Shuffle(T& items, Rng& rng) {
  for (int64_t i = static_cast<int64_t>(items.size()) - 1; i > 0; --i) {
    const int64_t j = UniformInt(rng, 0, i);
    using std::swap;
    swap(items[i], items[j]);
  }
}

}  // namespace miaudit

#endif  // MIAUDIT_SEEDING_H_

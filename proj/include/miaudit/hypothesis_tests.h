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

#ifndef MIAUDIT_HYPOTHESIS_TESTS_H_
#define MIAUDIT_HYPOTHESIS_TESTS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace miaudit {

enum class TestKind { kPairedT, kPermutation };

absl::string_view TestKindName(TestKind kind);

// Result of a one-sided paired test of H1: mean(x - y) > 0.
struct TestReport {
  double statistic = 0.0;
  double p_value = 1.0;
  int64_t n = 0;
  TestKind kind = TestKind::kPairedT;
  // Permutation tests only: number of sign assignments evaluated (including
  // the identity) and how many were at least as extreme as the observation.
  int64_t total = 0;
  int64_t extreme = 0;
};

// Student's t on the paired differences. When every difference is equal the
// statistic is degenerate: p = 1 if the mean is <= 0, p = 0 if it is > 0.
absl::StatusOr<TestReport> PairedTTest(std::span<const double> x,
                                       std::span<const double> y);

// Sign-flip permutation test on mean(x - y). Enumerates all 2^n flips when
// n <= kExhaustivePermutationLimit, otherwise draws `resamples` random flips
// and adds the identity. Flips that tie the observed mean count as extreme,
// so p >= 1 / total.
inline constexpr int kExhaustivePermutationLimit = 20;
absl::StatusOr<TestReport> PairedPermutationTest(std::span<const double> x,
                                                 std::span<const double> y,
                                                 int64_t resamples,
                                                 uint64_t seed);

// Benjamini-Yekutieli step-up adjustment. Output is in input order.
absl::StatusOr<std::vector<double>> BenjaminiYekutieli(
    std::span<const double> p_values);

}  // namespace miaudit

#endif  // MIAUDIT_HYPOTHESIS_TESTS_H_

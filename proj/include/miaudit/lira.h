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

#ifndef MIAUDIT_LIRA_H_
#define MIAUDIT_LIRA_H_

#include <cstdint>
#include <optional>
#include <span>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace miaudit {

// Every fitted variance is floored here so that likelihoods and KL
// divergences stay finite with one shadow or identical scores.
inline constexpr double kVarFloor = 1e-6;

struct GaussianSummary {
  double mean = 0.0;
  double var = 1.0;
  int64_t count = 0;
};

// Mean and population (ddof = 0) variance, floored at kVarFloor. Fails on
// empty input.
absl::StatusOr<GaussianSummary> FitGaussian(std::span<const double> values);

double LogGaussianDensity(double x, double mean, double var);

// log N(x; in) - log N(x; out) with floored variances.
double LogLikelihoodRatio(double x, const GaussianSummary& in,
                          const GaussianSummary& out);

enum class VarianceMode { kPerExample, kGlobal };

absl::string_view VarianceModeName(VarianceMode mode);
absl::StatusOr<VarianceMode> ParseVarianceMode(absl::string_view name);

// Pooled statistics used by kGlobal. The means are only a fallback for a
// sample without IN (or OUT) shadows.
struct GlobalVariance {
  double var_in = 1.0;
  double var_out = 1.0;
  double mean_in = 0.0;
  double mean_out = 0.0;
};

// Alg. 1 scoring in log space. In kPerExample mode both score sets must be
// non-empty; kGlobal replaces the per-example variances (and missing means)
// with `global`.
absl::StatusOr<double> LiraScore(double target_conf,
                                 std::span<const double> in_scores,
                                 std::span<const double> out_scores,
                                 VarianceMode mode,
                                 const std::optional<GlobalVariance>& global =
                                     std::nullopt);

// KL(N_t || N_s) for univariate Gaussians, variances floored first.
double KlDivergenceGaussians(const GaussianSummary& t, const GaussianSummary& s);

}  // namespace miaudit

#endif  // MIAUDIT_LIRA_H_

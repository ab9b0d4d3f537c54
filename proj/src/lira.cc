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

#include "miaudit/lira.h"

#include <algorithm>
#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace miaudit {

absl::StatusOr<GaussianSummary> FitGaussian(std::span<const double> values) {
  if (values.empty()) {
    return absl::FailedPreconditionError("cannot fit a Gaussian to no scores");
  }
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return GaussianSummary{mean, std::max(ss / n, kVarFloor),
                         static_cast<int64_t>(values.size())};
}

double LogGaussianDensity(double x, double mean, double var) {
  constexpr double kLogTwoPi = 1.8378770664093453;
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

double LogLikelihoodRatio(double x, const GaussianSummary& in,
                          const GaussianSummary& out) {
  return LogGaussianDensity(x, in.mean, std::max(in.var, kVarFloor)) -
         LogGaussianDensity(x, out.mean, std::max(out.var, kVarFloor));
}

absl::string_view VarianceModeName(VarianceMode mode) {
  return mode == VarianceMode::kPerExample ? "per_example" : "global";
}

absl::StatusOr<VarianceMode> ParseVarianceMode(absl::string_view name) {
  if (name == "per_example") return VarianceMode::kPerExample;
  if (name == "global") return VarianceMode::kGlobal;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown variance_mode '", name, "' (expected per_example|global|auto)"));
}

absl::StatusOr<double> LiraScore(double target_conf,
                                 std::span<const double> in_scores,
                                 std::span<const double> out_scores,
                                 VarianceMode mode,
                                 const std::optional<GlobalVariance>& global) {
  if (mode == VarianceMode::kPerExample) {
    if (in_scores.empty() || out_scores.empty()) {
      return absl::FailedPreconditionError(absl::StrCat(
          "insufficient shadows: ", in_scores.size(), " IN and ",
          out_scores.size(), " OUT"));
    }
    GaussianSummary in = *FitGaussian(in_scores);
    GaussianSummary out = *FitGaussian(out_scores);
    return LogLikelihoodRatio(target_conf, in, out);
  }
  if (!global) {
    return absl::InvalidArgumentError("global variance mode needs pooled variances");
  }
  GaussianSummary in{global->mean_in, global->var_in, 0};
  GaussianSummary out{global->mean_out, global->var_out, 0};
  if (!in_scores.empty()) in.mean = FitGaussian(in_scores)->mean;
  if (!out_scores.empty()) out.mean = FitGaussian(out_scores)->mean;
  return LogLikelihoodRatio(target_conf, in, out);
}

double KlDivergenceGaussians(const GaussianSummary& t, const GaussianSummary& s) {
  const double vt = std::max(t.var, kVarFloor);
  const double vs = std::max(s.var, kVarFloor);
  const double d = s.mean - t.mean;
  const double ratio = vt / vs;
  return 0.5 * (d * d / vs + ratio - std::log(ratio) - 1.0);
}

}  // namespace miaudit

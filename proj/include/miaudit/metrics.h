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

#ifndef MIAUDIT_METRICS_H_
#define MIAUDIT_METRICS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"

namespace miaudit {

// Empirical ROC of a membership score. Point k corresponds to predicting
// "member" for every score >= thresholds[k]; point 0 is the empty prediction
// (threshold +inf) and the last point predicts everything.
struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;
  std::vector<int64_t> true_positives;
  std::vector<int64_t> false_positives;
  int64_t n_pos = 0;
  int64_t n_neg = 0;

  size_t size() const { return fpr.size(); }
};

// Ties share one threshold, so they add a single (possibly diagonal) step.
absl::StatusOr<RocCurve> ComputeRoc(std::span<const double> scores,
                                    std::span<const bool> labels);

struct OperatingPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  int64_t true_positives = 0;
  int64_t false_positives = 0;
  double threshold = 0.0;
};

// Highest-TPR point whose empirical FPR does not exceed `fpr_target`. No
// interpolation between points.
OperatingPoint OperatingPointAtFpr(const RocCurve& roc, double fpr_target);
double TprAtFpr(const RocCurve& roc, double fpr_target);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Exact two-sided 1 - alpha binomial interval for tp successes out of p.
absl::StatusOr<Interval> ClopperPearson(int64_t tp, int64_t p, double alpha);

// One (epsilon, delta) pair of a privacy profile.
struct PrivacyPoint {
  double epsilon = 0.0;
  double delta = 0.0;
};

// Upper bound on the TPR of any membership test at the given FPR for a
// mechanism satisfying every (epsilon, delta) in `profile`; the tightest
// point wins. Result is clamped to [0, 1].
double DpTprBound(std::span<const PrivacyPoint> profile, double fpr);

}  // namespace miaudit

#endif  // MIAUDIT_METRICS_H_

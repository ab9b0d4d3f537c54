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

#include "miaudit/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "miaudit/special_functions.h"
#include "miaudit/status_macros.h"

namespace miaudit {

absl::StatusOr<RocCurve> ComputeRoc(std::span<const double> scores,
                                    std::span<const bool> labels) {
  if (scores.size() != labels.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "roc: ", scores.size(), " scores but ", labels.size(), " labels"));
  }
  RocCurve roc;
  for (bool l : labels) (l ? roc.n_pos : roc.n_neg)++;
  if (roc.n_pos == 0 || roc.n_neg == 0) {
    return absl::FailedPreconditionError(
        "roc needs at least one positive and one negative label");
  }
  for (double s : scores) {
    if (std::isnan(s)) {
      return absl::FailedPreconditionError("roc: NaN membership score");
    }
  }

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  const double pos = static_cast<double>(roc.n_pos);
  const double neg = static_cast<double>(roc.n_neg);
  auto push = [&](double threshold, int64_t tp, int64_t fp) {
    roc.thresholds.push_back(threshold);
    roc.true_positives.push_back(tp);
    roc.false_positives.push_back(fp);
    roc.tpr.push_back(tp / pos);
    roc.fpr.push_back(fp / neg);
  };

  push(std::numeric_limits<double>::infinity(), 0, 0);
  int64_t tp = 0;
  int64_t fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] ? tp : fp)++;
      ++i;
    }
    push(threshold, tp, fp);
  }
  return roc;
}

OperatingPoint OperatingPointAtFpr(const RocCurve& roc, double fpr_target) {
  OperatingPoint best;
  best.threshold = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < roc.size(); ++k) {
    if (roc.fpr[k] > fpr_target) break;  // fpr is nondecreasing
    best = {roc.fpr[k], roc.tpr[k], roc.true_positives[k],
            roc.false_positives[k], roc.thresholds[k]};
  }
  return best;
}

double TprAtFpr(const RocCurve& roc, double fpr_target) {
  return OperatingPointAtFpr(roc, fpr_target).tpr;
}

absl::StatusOr<Interval> ClopperPearson(int64_t tp, int64_t p, double alpha) {
  if (p <= 0 || tp < 0 || tp > p) {
    return absl::InvalidArgumentError(
        absl::StrCat("clopper-pearson needs 0 <= tp <= p, p > 0; got tp=", tp,
                     " p=", p));
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("clopper-pearson alpha must be in (0, 1); got ", alpha));
  }
  Interval out;
  const double k = static_cast<double>(tp);
  const double n = static_cast<double>(p);
  if (tp > 0) {
    MIAUDIT_ASSIGN_OR_RETURN(out.lo, RegIncBetaInv(k, n - k + 1.0, alpha / 2));
  }
  if (tp < p) {
    MIAUDIT_ASSIGN_OR_RETURN(out.hi,
                             RegIncBetaInv(k + 1.0, n - k, 1.0 - alpha / 2));
  }
  return out;
}

double DpTprBound(std::span<const PrivacyPoint> profile, double fpr) {
  double bound = 1.0;
  for (const PrivacyPoint& pt : profile) {
    const double linear = std::exp(pt.epsilon) * fpr + pt.delta;
    const double complement =
        1.0 - std::exp(-pt.epsilon) * (1.0 - pt.delta - fpr);
    bound = std::min(bound, std::min(linear, complement));
  }
  return std::clamp(bound, 0.0, 1.0);
}

}  // namespace miaudit

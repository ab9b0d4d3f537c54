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

#include <cmath>
#include <random>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace miaudit {
namespace {

using ::testing::ElementsAre;

// Binomial upper tail P(X >= k) by direct summation.
double UpperTail(int k, int n, double p) {
  double s = 0;
  for (int j = k; j <= n; ++j) {
    s += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) +
                  j * std::log(p) + (n - j) * std::log1p(-p));
  }
  return s;
}

TEST(RocTest, EndpointsAndTies) {
  const std::vector<double> scores = {0.9, 0.8, 0.8, 0.1};
  const bool labels[] = {true, false, true, false};
  absl::StatusOr<RocCurve> roc = ComputeRoc(scores, labels);
  ASSERT_TRUE(roc.ok());
  EXPECT_THAT(roc->fpr, ElementsAre(0.0, 0.0, 0.5, 1.0));
  EXPECT_THAT(roc->tpr, ElementsAre(0.0, 0.5, 1.0, 1.0));
  EXPECT_EQ(roc->n_pos, 2);
  EXPECT_EQ(roc->n_neg, 2);
}

TEST(RocTest, MatchesBruteForceThresholding) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> score(0, 30);
  std::bernoulli_distribution coin(0.4);
  std::vector<double> scores(300);
  std::unique_ptr<bool[]> labels(new bool[300]);
  for (int i = 0; i < 300; ++i) {
    scores[i] = score(rng);
    labels[i] = coin(rng);
  }
  labels[0] = true;
  labels[1] = false;
  absl::StatusOr<RocCurve> roc = ComputeRoc(scores, {labels.get(), 300});
  ASSERT_TRUE(roc.ok());
  for (size_t k = 1; k < roc->size(); ++k) {
    int tp = 0, fp = 0, pos = 0, neg = 0;
    for (int i = 0; i < 300; ++i) {
      (labels[i] ? pos : neg)++;
      if (scores[i] >= roc->thresholds[k]) (labels[i] ? tp : fp)++;
    }
    EXPECT_DOUBLE_EQ(roc->tpr[k], static_cast<double>(tp) / pos);
    EXPECT_DOUBLE_EQ(roc->fpr[k], static_cast<double>(fp) / neg);
  }
  EXPECT_EQ(roc->fpr.back(), 1.0);
  EXPECT_EQ(roc->tpr.back(), 1.0);
}

TEST(RocTest, RejectsDegenerateInput) {
  const std::vector<double> scores = {1, 2};
  const bool same[] = {true, true};
  EXPECT_EQ(ComputeRoc(scores, same).status().code(),
            absl::StatusCode::kFailedPrecondition);
  const std::vector<double> nan = {1, std::nan("")};
  const bool mixed[] = {true, false};
  EXPECT_FALSE(ComputeRoc(nan, mixed).ok());
}

TEST(TprAtFprTest, TakesLastPointWithinBudget) {
  const std::vector<double> scores = {5, 4, 3, 2, 1};
  const bool labels[] = {true, false, true, true, false};
  RocCurve roc = *ComputeRoc(scores, labels);
  EXPECT_DOUBLE_EQ(TprAtFpr(roc, 0.0), 1.0 / 3);
  EXPECT_DOUBLE_EQ(TprAtFpr(roc, 0.49), 1.0 / 3);
  EXPECT_DOUBLE_EQ(TprAtFpr(roc, 0.5), 1.0);
  const OperatingPoint op = OperatingPointAtFpr(roc, 0.5);
  EXPECT_EQ(op.true_positives, 3);
  EXPECT_EQ(op.false_positives, 1);
}

TEST(ClopperPearsonTest, KnownInterval) {
  const Interval ci = *ClopperPearson(5, 10, 0.05);
  EXPECT_NEAR(ci.lo, 0.187086, 1e-6);
  EXPECT_NEAR(ci.hi, 0.812914, 1e-6);
}

TEST(ClopperPearsonTest, EndpointsSolveTailEquations) {
  for (int n : {10, 57, 200}) {
    for (int k = 0; k <= n; k += std::max(1, n / 9)) {
      const Interval ci = *ClopperPearson(k, n, 0.05);
      if (k > 0) {
        EXPECT_NEAR(UpperTail(k, n, ci.lo), 0.025, 1e-9);
      } else {
        EXPECT_EQ(ci.lo, 0.0);
      }
      if (k < n) {
        EXPECT_NEAR(1 - UpperTail(k + 1, n, ci.hi), 0.025, 1e-9);
      } else {
        EXPECT_EQ(ci.hi, 1.0);
      }
    }
  }
}

TEST(ClopperPearsonTest, RejectsBadCounts) {
  EXPECT_FALSE(ClopperPearson(3, 2, 0.05).ok());
  EXPECT_FALSE(ClopperPearson(0, 0, 0.05).ok());
  EXPECT_FALSE(ClopperPearson(1, 2, 1.0).ok());
}

TEST(DpTprBoundTest, PureEpsilon) {
  const PrivacyPoint pt{1.0, 0.0};
  EXPECT_NEAR(DpTprBound({&pt, 1}, 0.01), std::exp(1.0) * 0.01, 1e-12);
  // Near FPR 1 the complementary constraint binds.
  EXPECT_NEAR(DpTprBound({&pt, 1}, 0.9), 1 - std::exp(-1.0) * 0.1, 1e-12);
}

TEST(DpTprBoundTest, TakesTightestProfilePoint) {
  const std::vector<PrivacyPoint> profile = {{8.0, 1e-5}, {20.0, 1e-9}, {2.0, 0.3}};
  const double fpr = 1e-3;
  double expected = 1.0;
  for (const PrivacyPoint& p : profile) {
    expected = std::min({expected, std::exp(p.epsilon) * fpr + p.delta,
                         1 - std::exp(-p.epsilon) * (1 - p.delta - fpr)});
  }
  EXPECT_DOUBLE_EQ(DpTprBound(profile, fpr), expected);
  EXPECT_NEAR(DpTprBound({&profile[0], 1}, fpr), 0.9996649, 1e-7);
}

}  // namespace
}  // namespace miaudit

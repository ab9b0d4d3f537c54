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

#include "miaudit/campaign.h"

#include <cstring>
#include <set>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace miaudit {
namespace {

using ::testing::ElementsAre;

GridConfig SmallGrid(int m) {
  GridConfig c;
  c.data.dim = 6;
  c.data.classes = 3;
  c.data.class_separation = 3.0;
  c.data.seed = 31;
  c.arch = Architecture::Linear(6, 3);
  c.m = m;
  c.shots = 10;
  c.space.trials = 2;
  c.space.epochs = 3;
  c.hpo_seed = 1;
  c.train_seed = 2;
  return c;
}

int64_t Budget(Strategy strategy, const CampaignParams& params, int m = 4) {
  MemoryStore store;
  auto grid = *MiaGrid::Build(SmallGrid(m));
  CellTrainer trainer(&store, std::nullopt);
  const int target[] = {0};
  auto results = RunCampaign(*grid, trainer, strategy, target, params, 9);
  EXPECT_TRUE(results.ok()) << results.status();
  return results.ok() ? (*results)[0].models_trained : -1;
}

TEST(CampaignBudgetTest, MatchesModelCountFormulas) {
  CampaignParams params;
  params.c = 2;
  params.n = 2;
  const int m = 4, t = 2, c = 2, n = 2;
  EXPECT_EQ(Budget(Strategy::kThreshold, params), 0);
  EXPECT_EQ(Budget(Strategy::kLira, params), m);
  EXPECT_EQ(Budget(Strategy::kAcc, params), m * t + m);
  EXPECT_EQ(Budget(Strategy::kKl, params), c * t + c * (n - 1) + m - n);
}

TEST(CampaignTest, KlWithTargetCandidateEqualsLira) {
  MemoryStore store;
  auto grid = *MiaGrid::Build(SmallGrid(4));
  CellTrainer trainer(&store, std::nullopt);
  const int targets[] = {0, 2};
  CampaignParams params;
  params.c = 1;
  params.kl_target_candidate = true;
  const auto lira = *RunCampaign(*grid, trainer, Strategy::kLira, targets, params, 4);
  const auto kl = *RunCampaign(*grid, trainer, Strategy::kKl, targets, params, 4);
  EXPECT_EQ(AttackResultsCsv(lira), AttackResultsCsv(kl));
  for (size_t k = 0; k < 2; ++k) {
    ASSERT_EQ(lira[k].scores.size(), kl[k].scores.size());
    EXPECT_EQ(std::memcmp(lira[k].scores.data(), kl[k].scores.data(),
                          lira[k].scores.size() * sizeof(double)),
              0);
    ASSERT_TRUE(kl[k].kl.has_value());
    EXPECT_EQ(kl[k].kl->candidates[0], kl[k].target_hypers);
  }
}

TEST(CampaignTest, ResultsCoverPoolWithTargetMembership) {
  MemoryStore store;
  auto grid = *MiaGrid::Build(SmallGrid(4));
  CellTrainer trainer(&store, std::nullopt);
  const int targets[] = {3};
  const auto results = *RunCampaign(*grid, trainer, Strategy::kLira, targets, {}, 4);
  ASSERT_EQ(results.size(), 1u);
  const AttackResult& r = results[0];
  EXPECT_EQ(r.scores.size(), grid->pool().size());
  EXPECT_EQ(r.is_member, *grid->row_membership(3));
  for (double s : r.scores) EXPECT_TRUE(std::isfinite(s));
}

TEST(CampaignTest, KlValidatesCandidateCount) {
  MemoryStore store;
  auto grid = *MiaGrid::Build(SmallGrid(2));
  CellTrainer trainer(&store, std::nullopt);
  const int targets[] = {0};
  CampaignParams params;
  params.c = 3;
  EXPECT_EQ(RunCampaign(*grid, trainer, Strategy::kKl, targets, params, 1).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(LiraPoolScoresTest, PerExampleMatchesLiraScore) {
  auto in_out = [](std::vector<double> scores, std::vector<uint8_t> members) {
    ShadowView v;
    v.scores = std::make_shared<const std::vector<double>>(std::move(scores));
    v.membership = std::make_shared<const std::vector<uint8_t>>(std::move(members));
    return v;
  };
  const std::vector<ShadowView> shadows = {
      in_out({1.0, 0.2}, {1, 0}), in_out({2.0, 0.1}, {0, 1}),
      in_out({1.5, 0.4}, {1, 1}), in_out({0.5, -0.3}, {0, 0})};
  const std::vector<double> target = {1.2, 0.0};
  const std::vector<uint64_t> ids = {0, 1};
  const std::vector<double> got =
      *LiraPoolScores(target, shadows, VarianceMode::kPerExample, ids);
  const std::vector<double> in0 = {1.0, 1.5}, out0 = {2.0, 0.5};
  const std::vector<double> in1 = {0.1, 0.4}, out1 = {0.2, -0.3};
  EXPECT_DOUBLE_EQ(got[0], *LiraScore(1.2, in0, out0, VarianceMode::kPerExample));
  EXPECT_DOUBLE_EQ(got[1], *LiraScore(0.0, in1, out1, VarianceMode::kPerExample));
}

TEST(SelectByMeanDivergenceTest, LowestMeanWinsAndTiesKeepFirst) {
  KlSelection sel;
  sel.divergences = {{0.5, 0.7}, {0.2, 0.4}, {0.4, 0.2}};
  SelectByMeanDivergence(sel);
  EXPECT_THAT(sel.mean_divergence, ElementsAre(0.6, ::testing::DoubleEq(0.3),
                                               ::testing::DoubleEq(0.3)));
  EXPECT_EQ(sel.winner, 1);
}

TEST(ShadowDivergenceTest, IsGaussianKl) {
  const std::vector<double> t = {0, 2}, s = {1, 1, 3, 3};
  // Fitted: target (1, 1), shadow (2, 1); KL = (1)^2 / 2.
  EXPECT_NEAR(*ShadowDivergence(t, s), 0.5, 1e-12);
}

TEST(StrategyTest, Names) {
  for (Strategy s : {Strategy::kLira, Strategy::kAcc, Strategy::kKl, Strategy::kThreshold}) {
    EXPECT_EQ(*ParseStrategy(StrategyName(s)), s);
  }
  EXPECT_FALSE(ParseStrategy("bogus").ok());
  EXPECT_EQ(*ResolveVarianceMode("auto", 64), VarianceMode::kPerExample);
  EXPECT_EQ(*ResolveVarianceMode("auto", 63), VarianceMode::kGlobal);
  EXPECT_EQ(*ResolveVarianceMode("global", 100), VarianceMode::kGlobal);
  EXPECT_FALSE(ResolveVarianceMode("fancy", 4).ok());
}

}  // namespace
}  // namespace miaudit

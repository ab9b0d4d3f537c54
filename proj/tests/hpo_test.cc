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

#include "miaudit/hpo.h"

#include <cmath>
#include <set>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "miaudit/synthdata.h"

namespace miaudit {
namespace {

using ::testing::HasSubstr;

LabeledSet Data(int n) {
  DataSpec spec;
  spec.dim = 4;
  spec.classes = 3;
  spec.class_separation = 3.0;
  spec.seed = 8;
  return *SamplePopulation(spec, n, "hpo-test");
}

SearchSpace SmallSpace() {
  SearchSpace space;
  space.trials = 6;
  space.epochs = 3;
  return space;
}

TEST(SearchSpaceTest, Validation) {
  SearchSpace space;
  EXPECT_TRUE(space.Validate(50).ok());
  EXPECT_FALSE(space.Validate(5).ok());
  space.lr_min = 1.0;
  EXPECT_FALSE(space.Validate(50).ok());
  space = SearchSpace{};
  space.trials = 0;
  EXPECT_FALSE(space.Validate(50).ok());
}

TEST(SplitTrainValTest, SeventyThirtyAndDisjoint) {
  const LabeledSet data = Data(43);
  const auto [train, val] = *SplitTrainVal(data, 1);
  EXPECT_EQ(train.size(), static_cast<size_t>(std::floor(0.7 * 43)));
  EXPECT_EQ(train.size() + val.size(), 43u);
  std::set<uint64_t> ids(train.ids().begin(), train.ids().end());
  for (uint64_t id : val.ids()) EXPECT_FALSE(ids.contains(id));
  std::set<int> classes(train.labels().begin(), train.labels().end());
  EXPECT_EQ(classes.size(), 3u);
  const auto again = *SplitTrainVal(data, 1);
  EXPECT_EQ(again.first.ContentDigest(), train.ContentDigest());
}

TEST(RunHpoTest, PicksBestTrialDeterministically) {
  const LabeledSet data = Data(60);
  const Architecture arch = Architecture::Linear(4, 3);
  const HpoResult a = *RunHpo(arch, data, SmallSpace(), std::nullopt, 5);
  const HpoResult b = *RunHpo(arch, data, SmallSpace(), std::nullopt, 5);
  ASSERT_EQ(a.trials.size(), 6u);
  double best = -1;
  int best_index = -1;
  for (size_t t = 0; t < a.trials.size(); ++t) {
    const HyperParams& h = a.trials[t].hypers;
    EXPECT_GE(h.learning_rate, 1e-7);
    EXPECT_LE(h.learning_rate, 1e-2);
    EXPECT_GE(h.batch_size, 10);
    EXPECT_LE(h.batch_size, 60);
    EXPECT_EQ(h.epochs, 3);
    EXPECT_FALSE(h.is_private());
    if (a.trials[t].val_accuracy > best) {
      best = a.trials[t].val_accuracy;
      best_index = static_cast<int>(t);
    }
    EXPECT_EQ(h, b.trials[t].hypers);
  }
  EXPECT_EQ(a.best_index, best_index);
  EXPECT_EQ(a.best, a.trials[best_index].hypers);
  EXPECT_EQ(a.best_model.weights, b.best_model.weights);
  EXPECT_EQ(a.train_ids.size(), 42u);
}

TEST(RunHpoTest, DpTrialsCarryCalibratedNoise) {
  const LabeledSet data = Data(60);
  const DpSpec dp{8.0, 1e-5};
  const HpoResult r = *RunHpo(Architecture::Linear(4, 3), data, SmallSpace(), dp, 2);
  for (const HpoTrial& t : r.trials) {
    ASSERT_TRUE(t.hypers.is_private());
    EXPECT_GE(*t.hypers.clip_norm, 0.2);
    EXPECT_LE(*t.hypers.clip_norm, 10.0);
    const double eps = *AccountEpsilon(*t.hypers.noise_multiplier,
                                       TrainingSteps(42, t.hypers),
                                       SamplingRate(42, t.hypers), 1e-5);
    EXPECT_LE(eps, 8.0);
  }
}

TEST(RunHpoTest, RecordsFailedTrials) {
  const LabeledSet data = Data(60);
  int calls = 0;
  TrainFn flaky = [&](const Architecture& arch, const LabeledSet& d, const HyperParams& h,
                      uint64_t seed) -> absl::StatusOr<Model> {
    if (calls++ % 2 == 0) return absl::InternalError("boom");
    return Train(arch, d, h, seed);
  };
  const HpoResult r =
      *RunHpo(Architecture::Linear(4, 3), data, SmallSpace(), std::nullopt, 5, flaky);
  EXPECT_EQ(r.trials[0].error, "boom");
  EXPECT_TRUE(r.trials[1].ok());
  EXPECT_EQ(r.best_index % 2, 1);

  TrainFn broken = [](const Architecture&, const LabeledSet&, const HyperParams&,
                      uint64_t) -> absl::StatusOr<Model> {
    return absl::InternalError("diverged");
  };
  absl::StatusOr<HpoResult> failed =
      RunHpo(Architecture::Linear(4, 3), data, SmallSpace(), std::nullopt, 5, broken);
  EXPECT_EQ(failed.status().code(), absl::StatusCode::kInternal);
  EXPECT_THAT(failed.status().message(), HasSubstr("diverged"));
}

TEST(HpoSerializationTest, CsvAndJson) {
  const HpoResult r = *RunHpo(Architecture::Linear(4, 3), Data(60), SmallSpace(),
                              std::nullopt, 5);
  const std::string csv = HpoTrialsCsv(r);
  EXPECT_THAT(csv, ::testing::StartsWith("trial,lr,batch,clip,noise,val_acc\n"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  HyperParams h;
  h.learning_rate = 3.25e-4;
  h.batch_size = 17;
  h.clip_norm = 0.5;
  h.noise_multiplier = 1.75;
  EXPECT_EQ(*HyperParamsFromJson(HyperParamsJson(h)), h);
  EXPECT_EQ(*HyperParamsFromJson(HyperParamsJson(HyperParams{})), HyperParams{});
  EXPECT_EQ(HyperParamsFromJson("[1]").status().code(), absl::StatusCode::kDataLoss);
}

}  // namespace
}  // namespace miaudit

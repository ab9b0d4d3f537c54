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

#include "miaudit/experiment.h"

#include <filesystem>

#include "absl/strings/str_split.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "json.hpp"

namespace miaudit {
namespace {

namespace fs = std::filesystem;
using ::testing::HasSubstr;
using ::testing::StartsWith;

std::string TinyConfigJson(const fs::path& out, absl::string_view extra = "") {
  return absl::StrCat(R"({
    "name": "tiny",
    "data": {"dim": 6, "classes": 3, "class_separation": 3.0, "noise_sigma": 1.0},
    "grid": {"M": 3, "S": 10, "targets": [0, 1]},
    "hpo": {"source": "td", "trials": 2, "epochs": 3},
    "attack": {"strategies": ["lira", "threshold"], "C": 2, "N": 1},
    "repeats": 2,
    "output_dir": ")",
                      out.string(), "\"", extra, "}");
}

fs::path Scratch() {
  const fs::path p = fs::path(::testing::TempDir()) / "experiment_test" /
                     ::testing::UnitTest::GetInstance()->current_test_info()->name();
  fs::remove_all(p);
  return p;
}

TEST(ParseExperimentConfigTest, DefaultsAndRoundTrip) {
  const ExperimentConfig c = *ParseExperimentConfig(TinyConfigJson("/tmp/x"));
  EXPECT_EQ(c.m, 3);
  EXPECT_EQ(c.shots, 10);
  EXPECT_EQ(c.arch, Architecture::Linear(6, 3));
  EXPECT_FALSE(c.dp.has_value());
  EXPECT_EQ(c.TargetRows(), (std::vector<int>{0, 1}));
  EXPECT_THAT(c.fpr_grid, ::testing::ElementsAre(1e-3, 1e-2, 1e-1));
  const ExperimentConfig back = *ParseExperimentConfig(ExperimentConfigJson(c));
  EXPECT_EQ(ExperimentConfigJson(back), ExperimentConfigJson(c));
}

TEST(ParseExperimentConfigTest, RejectsUnknownKeysAndBadValues) {
  auto code = [](absl::string_view text) {
    return ParseExperimentConfig(text).status().code();
  };
  EXPECT_EQ(code(TinyConfigJson("/tmp/x", R"(, "bogus": 1)")),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(code(R"({"grid": {"M": 0}})"), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(code(R"({"grid": {"M": "many"}})"), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(code(R"({"grid": {"M": 3, "targets": [4]}})"), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(code(R"({"dp": {"epsilon": -1}})"), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(code(R"({"attack": {"strategies": ["nope"]}})"),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(code(R"({"hpo": {"epochs": 500}})"), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(code("{not json"), absl::StatusCode::kInvalidArgument);
  EXPECT_TRUE(ParseExperimentConfig(R"({"hpo": {"epochs": 200}})").ok());
}

TEST(ExperimentConfigTest, SeedsDeriveIndependently) {
  ExperimentConfig c = *ParseExperimentConfig("{}");
  ApplyMasterSeed(c, 42);
  const std::set<uint64_t> seeds = {c.seeds.data, c.seeds.hpo, c.seeds.train,
                                    c.seeds.attack};
  EXPECT_EQ(seeds.size(), 4u);
  EXPECT_NE(c.GridFor(0, HpoSource::kTd).data.seed, c.GridFor(1, HpoSource::kTd).data.seed);
  EXPECT_NE(c.AttackSeed(0), c.AttackSeed(1));
}

TEST(CmdGridTest, InvalidConfigHasNoSideEffects) {
  const fs::path out = Scratch();
  ExperimentConfig c = *ParseExperimentConfig(TinyConfigJson(out));
  c.shots = 1;  // rows too small for HPO
  MemoryStore store;
  EXPECT_EQ(CmdGrid(c, store, nullptr).status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_TRUE(store.ListManifests()->empty());
}

TEST(CmdAttackTest, NeedsGridManifest) {
  const ExperimentConfig c = *ParseExperimentConfig(TinyConfigJson(Scratch()));
  MemoryStore store;
  EXPECT_EQ(CmdAttack(c, c.strategies, store, nullptr).status().code(),
            absl::StatusCode::kNotFound);
}

TEST(PipelineTest, GridAttackEvalAndResume) {
  const fs::path out = Scratch();
  const ExperimentConfig c = *ParseExperimentConfig(TinyConfigJson(out));
  MemoryStore store;
  const GridSummary grid = *CmdGrid(c, store, nullptr);
  // Per repeat: 2 HPO trials and one target model for each of 2 targets.
  EXPECT_EQ(grid.models_trained, 2 * 2 * 3);
  EXPECT_TRUE(fs::exists(out / "grid_manifest.json"));
  EXPECT_EQ(CmdGrid(c, store, nullptr)->models_trained, 0);

  const AttackSummary attack = *CmdAttack(c, c.strategies, store, nullptr);
  EXPECT_EQ(attack.models_trained.at(Strategy::kThreshold), 0);
  EXPECT_GT(attack.models_trained.at(Strategy::kLira), 0);
  EXPECT_EQ(attack.results.at(Strategy::kLira).size(), 2u);
  const std::string first = *ReadFile(out / "attack" / "lira" / "scores_r1.csv");
  const AttackSummary again = *CmdAttack(c, c.strategies, store, nullptr);
  EXPECT_EQ(again.models_trained.at(Strategy::kLira), 0);
  EXPECT_EQ(*ReadFile(out / "attack" / "lira" / "scores_r1.csv"), first);

  const EvalSummary eval = *CmdEval(c, nullptr);
  EXPECT_EQ(eval.rows.size(), 2u * 3);
  for (const char* name : {"roc_lira.csv", "roc_threshold.csv"}) {
    const std::string roc = *ReadFile(out / name);
    const std::vector<std::string> lines = absl::StrSplit(roc, '\n', absl::SkipEmpty());
    EXPECT_EQ(lines[0], "fpr,tpr,threshold");
    EXPECT_THAT(lines[1], StartsWith("0,0,"));
    EXPECT_THAT(lines.back(), StartsWith("1,1,"));
  }
  EXPECT_THAT(*ReadFile(out / "roc.svg"), HasSubstr("<svg"));
  EXPECT_THAT(*ReadFile(out / "summary.csv"), StartsWith("strategy,fpr,tpr,"));
  for (const EvalRow& row : eval.rows) {
    EXPECT_EQ(row.repeat_tpr.size(), 2u);
    EXPECT_LE(row.ci.lo, row.tpr);
    EXPECT_GE(row.ci.hi, row.tpr);
    EXPECT_FALSE(row.dp_bound.has_value());
  }
  EXPECT_TRUE(FindUnreferenced(store)->empty());
}

TEST(PipelineTest, DpRunReportsBound) {
  const fs::path out = Scratch();
  ExperimentConfig c = *ParseExperimentConfig(
      TinyConfigJson(out, R"(, "dp": {"epsilon": 1.0, "delta": 1e-5})"));
  c.repeats = 1;
  MemoryStore store;
  ASSERT_TRUE(CmdGrid(c, store, nullptr).ok());
  ASSERT_TRUE(CmdAttack(c, c.strategies, store, nullptr).ok());
  const EvalSummary eval = *CmdEval(c, nullptr);
  EXPECT_EQ(eval.profile.size(), 40u);
  for (const EvalRow& row : eval.rows) {
    ASSERT_TRUE(row.dp_bound.has_value());
    EXPECT_LE(row.ci.lo, *row.dp_bound);
  }
  EXPECT_THAT(*ReadFile(out / "roc.svg"), HasSubstr("DP(UB)"));
}

TEST(CompareTablesTest, AdjustsPerTestKind) {
  ExperimentConfig c = *ParseExperimentConfig(TinyConfigJson("/tmp/x"));
  c.fpr_grid = {0.01, 0.1};
  std::vector<HpoPair> pairs;
  for (int t = 0; t < 6; ++t) {
    pairs.push_back({Strategy::kLira, 0, t, {0.1 + 0.01 * t, 0.5}, {0.1, 0.5 - 0.01 * t}});
    pairs.push_back({Strategy::kThreshold, 0, t, {0.2, 0.3}, {0.2, 0.3}});
  }
  const std::vector<CompareRow> rows = *CompareTables(c, pairs);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].n, 6);
  std::vector<double> p;
  for (const CompareRow& r : rows) {
    for (const CompareCell& cell : r.t_test) p.push_back(cell.p);
  }
  const std::vector<double> adjusted = *BenjaminiYekutieli(p);
  EXPECT_DOUBLE_EQ(rows[0].t_test[0].p_adjusted, adjusted[0]);
  EXPECT_DOUBLE_EQ(rows[1].t_test[1].p_adjusted, adjusted[3]);
  EXPECT_NEAR(rows[0].t_test[0].mean_diff, 0.025, 1e-12);

  const std::string csv = CompareTableCsv(c, rows, TestKind::kPermutation);
  EXPECT_THAT(csv, StartsWith("dataset,model,config,S,epsilon,mia,dtpr_e4_0.01,p_0.01,"
                              "p_adj_0.01,dtpr_e4_0.1,p_0.1,p_adj_0.1\n"));
  EXPECT_THAT(csv, HasSubstr("tiny,linear,td_vs_ed,10,inf,LiRA,250.00,"));
}

}  // namespace
}  // namespace miaudit

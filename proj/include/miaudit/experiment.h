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

#ifndef MIAUDIT_EXPERIMENT_H_
#define MIAUDIT_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "miaudit/accountant.h"
#include "miaudit/campaign.h"
#include "miaudit/grid.h"
#include "miaudit/hypothesis_tests.h"
#include "miaudit/metrics.h"
#include "miaudit/store.h"

namespace miaudit {

struct SeedConfig {
  uint64_t data = 1;
  uint64_t hpo = 2;
  uint64_t train = 3;
  uint64_t attack = 4;
};

struct CompareConfig {
  // Both arms tune on the same external data; only the target seeds differ.
  bool null_hypothesis = false;
  int64_t resamples = 10000;
};

// Everything a run depends on. Parsed from a JSON file; see configs/.
struct ExperimentConfig {
  std::string name = "toy";
  DataSpec data;
  Architecture arch;
  int m = 16;
  int shots = 50;
  std::vector<int> targets;  // empty: every grid row
  std::optional<DpSpec> dp;
  HpoSource hpo_source = HpoSource::kTd;
  SearchSpace space;
  std::vector<Strategy> strategies = {Strategy::kLira, Strategy::kAcc, Strategy::kKl,
                                      Strategy::kThreshold};
  CampaignParams attack;
  int repeats = 1;
  std::vector<double> fpr_grid = {1e-3, 1e-2, 1e-1};
  SeedConfig seeds;
  CompareConfig compare;
  std::filesystem::path output_dir = "miaudit-out";
  int jobs = 1;

  absl::Status Validate() const;
  std::vector<int> TargetRows() const;
  GridConfig GridFor(int repeat, HpoSource source) const;
  uint64_t AttackSeed(int repeat) const;
};

absl::StatusOr<ExperimentConfig> ParseExperimentConfig(absl::string_view json);
absl::StatusOr<ExperimentConfig> LoadExperimentConfig(
    const std::filesystem::path& path);
// Canonical JSON; parsing it yields an equal config.
std::string ExperimentConfigJson(const ExperimentConfig& config);
// Replaces every seed by DeriveSeed(seed, purpose).
void ApplyMasterSeed(ExperimentConfig& config, uint64_t seed);

// --- grid ---------------------------------------------------------------

struct GridSummary {
  int64_t models_trained = 0;
  std::filesystem::path manifest;
};

// Builds the pool, mask and row HPO for every repeat and trains the target
// models. Writes <out>/grid_manifest.json.
absl::StatusOr<GridSummary> CmdGrid(const ExperimentConfig& config,
                                    ObjectStore& store, std::ostream* log);

// --- attack -------------------------------------------------------------

struct AttackSummary {
  std::map<Strategy, int64_t> models_trained;
  std::map<Strategy, std::vector<std::vector<AttackResult>>> results;  // [repeat]
};

// Runs every strategy on every repeat. Writes per-strategy score CSVs, budget
// and target tables, and a campaign manifest. Requires the grid manifest.
absl::StatusOr<AttackSummary> CmdAttack(const ExperimentConfig& config,
                                        std::span<const Strategy> strategies,
                                        ObjectStore& store, std::ostream* log);

// --- eval ---------------------------------------------------------------

struct EvalRow {
  Strategy strategy = Strategy::kLira;
  double fpr = 0.0;
  // Pooled over targets and repeats.
  double tpr = 0.0;
  int64_t tp = 0;
  int64_t n_pos = 0;
  int64_t fp = 0;
  int64_t n_neg = 0;
  Interval ci;
  // Per-repeat pooled TPR.
  std::vector<double> repeat_tpr;
  double tpr_median = 0.0;
  double tpr_mean = 0.0;
  std::optional<double> dp_bound;
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  std::vector<PrivacyPoint> profile;  // worst case over targets; empty w/o DP
};

// Reads attack outputs, writes roc_<strategy>.csv, summary.csv and roc.svg,
// and re-renders the TD/ED tables when compare-hpo output exists. Fails with
// kInternal when a Clopper-Pearson lower bound exceeds the DP bound.
absl::StatusOr<EvalSummary> CmdEval(const ExperimentConfig& config,
                                    std::ostream* log);

// Pooled ROC of a set of attack results.
absl::StatusOr<RocCurve> PooledRoc(std::span<const AttackResult> results);

// Privacy profile that every target of `targets` satisfies: for each delta
// the largest epsilon among them.
struct TrainedTarget {
  int row = 0;
  int64_t n_train = 0;
  HyperParams hypers;  // resolved (concrete noise multiplier)
};
absl::StatusOr<std::vector<PrivacyPoint>> WorstCaseProfile(
    std::span<const TrainedTarget> targets);

// --- TD versus ED HPO ---------------------------------------------------

// Per-target TPRs of the two arms at every FPR of the grid.
struct HpoPair {
  Strategy strategy = Strategy::kLira;
  int repeat = 0;
  int target = 0;
  std::vector<double> tpr_td;
  std::vector<double> tpr_ed;
};

absl::StatusOr<std::vector<HpoPair>> HpoPairsForRepeat(
    const ExperimentConfig& config, int repeat, Strategy strategy,
    ObjectStore& store);

struct CompareCell {
  double mean_diff = 0.0;  // mean(tpr_td - tpr_ed)
  double p = 1.0;
  double p_adjusted = 1.0;
};

struct CompareRow {
  Strategy strategy = Strategy::kLira;
  int64_t n = 0;
  std::vector<CompareCell> t_test;       // per FPR
  std::vector<CompareCell> permutation;  // per FPR
};

// One row per strategy; BY adjustment is applied per test kind across every
// row and FPR.
absl::StatusOr<std::vector<CompareRow>> CompareTables(
    const ExperimentConfig& config, std::span<const HpoPair> pairs);

// Columns: dataset,model,config,S,epsilon,mia, then for each FPR f:
// dtpr_e4_<f>,p_<f>,p_adj_<f>. dtpr is mean(tpr_td - tpr_ed) * 1e4.
std::string CompareTableCsv(const ExperimentConfig& config,
                            std::span<const CompareRow> rows, TestKind kind);

absl::StatusOr<std::vector<CompareRow>> CmdCompareHpo(const ExperimentConfig& config,
                                                      ObjectStore& store,
                                                      std::ostream* log);

// --- gc -----------------------------------------------------------------

absl::StatusOr<std::vector<UnreferencedObject>> CmdGc(ObjectStore& store);

}  // namespace miaudit

#endif  // MIAUDIT_EXPERIMENT_H_

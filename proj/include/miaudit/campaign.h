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

#ifndef MIAUDIT_CAMPAIGN_H_
#define MIAUDIT_CAMPAIGN_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "miaudit/grid.h"
#include "miaudit/lira.h"
#include "miaudit/model.h"

namespace miaudit {

enum class Strategy { kLira, kAcc, kKl, kThreshold };

absl::string_view StrategyName(Strategy strategy);
absl::StatusOr<Strategy> ParseStrategy(absl::string_view name);

struct CampaignParams {
  int c = 4;  // KL candidates
  int n = 2;  // models per KL candidate
  // per_example, global, or auto (per_example once M >= 64).
  std::string variance_mode = "auto";
  // Use the target's own hyperparameters as the only KL candidate.
  bool kl_target_candidate = false;
  // Salt for the target models (see MiaGrid::CellSeed).
  std::string target_salt;
};

absl::StatusOr<VarianceMode> ResolveVarianceMode(absl::string_view name, int m);

// Alg. 2 bookkeeping for one target.
struct KlSelection {
  std::vector<int> source_rows;  // row whose HPO produced each candidate, or -1
  std::vector<HyperParams> candidates;
  std::vector<std::vector<double>> divergences;  // [candidate][shadow set]
  std::vector<double> mean_divergence;
  int winner = 0;
};

struct AttackResult {
  int target = 0;
  Strategy strategy = Strategy::kLira;
  std::vector<uint64_t> sample_ids;
  std::vector<double> scores;
  std::vector<uint8_t> is_member;
  // Models newly trained while attacking this target.
  int64_t models_trained = 0;
  HyperParams target_hypers;
  std::optional<KlSelection> kl;
};

// Runs HPO for each target row and trains its diagonal model.
absl::Status PrepareTargets(MiaGrid& grid, CellTrainer& trainer,
                            std::span<const int> targets, absl::string_view salt = "");

absl::StatusOr<ShadowView> TargetView(MiaGrid& grid, CellTrainer& trainer, int row,
                                      absl::string_view salt = "");

// Alg. 1 over the pool: per-sample IN/OUT fits from `shadows` and a log
// likelihood ratio for each target score. Shadows are consumed in the given
// order. Global mode pools within-sample variances over the whole pool.
absl::StatusOr<std::vector<double>> LiraPoolScores(
    std::span<const double> target_scores, std::span<const ShadowView> shadows,
    VarianceMode mode, std::span<const uint64_t> sample_ids);

// IN and OUT summaries of one pool sample across `shadows`.
absl::StatusOr<std::pair<GaussianSummary, GaussianSummary>> EstimateInOut(
    std::span<const ShadowView> shadows, size_t sample);

// phi_KL between the target's and a shadow's logit scores on the shadow's
// training set.
absl::StatusOr<double> ShadowDivergence(std::span<const double> target_scores,
                                        std::span<const double> shadow_scores);

// Mean divergence per candidate and the argmin (lowest index on ties).
void SelectByMeanDivergence(KlSelection& selection);

// Standalone Alg. 2: trains TRAIN(arch, shadow_sets[i], candidates[j]) for
// every pair and returns the candidate whose mean divergence is smallest.
absl::StatusOr<KlSelection> KlLiraSelect(const Model& target,
                                         std::span<const HyperParams> candidates,
                                         std::span<const LabeledSet> shadow_sets,
                                         CellTrainer& trainer, uint64_t seed);

// One HPO result per shadow set, in order. Seeds follow MiaGrid::HpoSeed.
absl::StatusOr<std::vector<HyperParams>> AccLiraHypers(
    const Architecture& arch, std::span<const LabeledSet> shadow_sets,
    const SearchSpace& space, const std::optional<DpSpec>& dp, uint64_t hpo_seed,
    CellTrainer& trainer);

// Shadow-free baseline: the target's own logit score.
AttackResult ThresholdAttack(const Model& target, const LabeledSet& pool,
                             std::span<const uint8_t> is_member);

// Attacks each target in turn with `strategy`. Targets are prepared first and
// are not counted in models_trained.
absl::StatusOr<std::vector<AttackResult>> RunCampaign(
    MiaGrid& grid, CellTrainer& trainer, Strategy strategy,
    std::span<const int> targets, const CampaignParams& params, uint64_t seed);

// Columns: target,sample_id,score,is_member. The strategy is implied by the
// file location, so equivalent campaigns produce identical files.
std::string AttackResultsCsv(std::span<const AttackResult> results);

}  // namespace miaudit

#endif  // MIAUDIT_CAMPAIGN_H_

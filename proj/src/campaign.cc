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

#include <algorithm>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "miaudit/parallel.h"
#include "miaudit/seeding.h"
#include "miaudit/status_macros.h"

namespace miaudit {
namespace {

std::vector<int> Permutation(int n, uint64_t seed) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  Shuffle(order, rng);
  return order;
}

std::vector<double> Gather(std::span<const double> values,
                           std::span<const uint8_t> membership) {
  std::vector<double> out;
  for (size_t k = 0; k < values.size(); ++k) {
    if (membership[k]) out.push_back(values[k]);
  }
  return out;
}

// Trains (or loads) cells (row, hypers) for all `rows` in parallel.
absl::StatusOr<std::vector<ShadowView>> Cells(MiaGrid& grid, CellTrainer& trainer,
                                              std::span<const int> rows,
                                              const HyperParams& hypers) {
  std::vector<ShadowView> views(rows.size());
  MIAUDIT_RETURN_IF_ERROR(ParallelFor(rows.size(), trainer.jobs(), [&](size_t k) {
    absl::StatusOr<ShadowView> view = grid.Cell(rows[k], hypers, trainer);
    if (!view.ok()) return view.status();
    views[k] = *std::move(view);
    return absl::OkStatus();
  }));
  return views;
}

absl::Status PrepareRowHpo(MiaGrid& grid, CellTrainer& trainer,
                           std::span<const int> rows) {
  return ParallelFor(rows.size(), trainer.jobs(), [&](size_t k) {
    return grid.RowHpo(rows[k], trainer).status();
  });
}

std::vector<int> OtherRows(int rows, int target) {
  std::vector<int> out;
  for (int r = 0; r < rows; ++r) {
    if (r != target) out.push_back(r);
  }
  return out;
}

struct KlOutcome {
  KlSelection selection;
  std::vector<ShadowView> shadows;  // attack shadows, ascending row order
};

absl::StatusOr<KlOutcome> RunKl(MiaGrid& grid, CellTrainer& trainer, int target,
                                const ShadowView& target_view,
                                const HyperParams& target_hypers,
                                const CampaignParams& params, uint64_t seed) {
  const int rows = grid.rows();
  const bool td = grid.config().hpo_source == HpoSource::kTd;
  KlSelection sel;
  if (params.kl_target_candidate) {
    sel.source_rows = {-1};
    sel.candidates = {target_hypers};
  } else {
    const std::vector<int> seeds = Permutation(rows, DeriveSeed(seed, "kl-seed-rows"));
    for (int k = 0; k <= params.c && static_cast<int>(sel.source_rows.size()) < params.c;
         ++k) {
      if (seeds[k] != target) sel.source_rows.push_back(seeds[k]);
    }
    MIAUDIT_RETURN_IF_ERROR(PrepareRowHpo(grid, trainer, sel.source_rows));
    for (int s : sel.source_rows) {
      MIAUDIT_ASSIGN_OR_RETURN(HyperParams h, grid.RowHypers(s, trainer));
      sel.candidates.push_back(h);
    }
  }

  const std::vector<int> order =
      Permutation(rows, DeriveSeed(seed, "kl-shadow-rows", static_cast<uint64_t>(target)));
  sel.divergences.resize(sel.candidates.size());
  for (size_t j = 0; j < sel.candidates.size(); ++j) {
    const int source = sel.source_rows[j];
    const bool reuse_trial = source >= 0 && td;
    std::vector<ShadowView> views;
    if (reuse_trial) {
      MIAUDIT_ASSIGN_OR_RETURN(ShadowView trial, grid.HpoTrialShadow(source, trainer));
      views.push_back(std::move(trial));
    }
    std::vector<int> fresh;
    for (int r : order) {
      if (static_cast<int>(views.size() + fresh.size()) >= params.n) break;
      if (r != target && r != source) fresh.push_back(r);
    }
    if (static_cast<int>(views.size() + fresh.size()) < params.n) {
      return absl::InvalidArgumentError(absl::StrCat(
          "KL-LiRA needs N=", params.n, " shadow sets per candidate but only ",
          views.size() + fresh.size(), " grid rows are available"));
    }
    absl::StatusOr<std::vector<ShadowView>> cells =
        Cells(grid, trainer, fresh, sel.candidates[j]);
    if (!cells.ok()) {
      return absl::Status(cells.status().code(),
                          absl::StrCat("KL candidate ", j, " (",
                                       sel.candidates[j].DebugString(),
                                       "): ", cells.status().message()));
    }
    for (ShadowView& v : *cells) views.push_back(std::move(v));
    for (const ShadowView& v : views) {
      MIAUDIT_ASSIGN_OR_RETURN(
          double phi, ShadowDivergence(Gather(*target_view.scores, *v.membership),
                                       Gather(*v.scores, *v.membership)));
      sel.divergences[j].push_back(phi);
    }
  }
  SelectByMeanDivergence(sel);

  const HyperParams& winner = sel.candidates[sel.winner];
  const int winner_source = sel.source_rows[sel.winner];
  std::vector<int> shadow_rows = OtherRows(rows, target);
  std::vector<int> fresh_rows;
  for (int r : shadow_rows) {
    if (!(td && r == winner_source)) fresh_rows.push_back(r);
  }
  MIAUDIT_ASSIGN_OR_RETURN(std::vector<ShadowView> fresh,
                           Cells(grid, trainer, fresh_rows, winner));
  KlOutcome outcome;
  size_t next = 0;
  for (int r : shadow_rows) {
    if (td && r == winner_source) {
      MIAUDIT_ASSIGN_OR_RETURN(ShadowView trial, grid.HpoTrialShadow(r, trainer));
      outcome.shadows.push_back(std::move(trial));
    } else {
      outcome.shadows.push_back(fresh[next++]);
    }
  }
  outcome.selection = std::move(sel);
  return outcome;
}

}  // namespace

absl::string_view StrategyName(Strategy strategy) {
  switch (strategy) {
    case Strategy::kLira:
      return "lira";
    case Strategy::kAcc:
      return "acc";
    case Strategy::kKl:
      return "kl";
    case Strategy::kThreshold:
      return "threshold";
  }
  return "unknown";
}

absl::StatusOr<Strategy> ParseStrategy(absl::string_view name) {
  for (Strategy s :
       {Strategy::kLira, Strategy::kAcc, Strategy::kKl, Strategy::kThreshold}) {
    if (StrategyName(s) == name) return s;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown strategy '", name, "' (expected lira|acc|kl|threshold)"));
}

absl::StatusOr<VarianceMode> ResolveVarianceMode(absl::string_view name, int m) {
  if (name == "auto") {
    return m >= 64 ? VarianceMode::kPerExample : VarianceMode::kGlobal;
  }
  return ParseVarianceMode(name);
}

absl::Status PrepareTargets(MiaGrid& grid, CellTrainer& trainer,
                            std::span<const int> targets, absl::string_view salt) {
  for (int t : targets) {
    if (t < 0 || t >= grid.rows()) {
      return absl::InvalidArgumentError(
          absl::StrCat("target ", t, " outside [0, ", grid.rows(), ")"));
    }
  }
  MIAUDIT_RETURN_IF_ERROR(PrepareRowHpo(grid, trainer, targets));
  return ParallelFor(targets.size(), trainer.jobs(), [&](size_t k) {
    return TargetView(grid, trainer, targets[k], salt).status();
  });
}

absl::StatusOr<ShadowView> TargetView(MiaGrid& grid, CellTrainer& trainer, int row,
                                      absl::string_view salt) {
  MIAUDIT_ASSIGN_OR_RETURN(HyperParams hypers, grid.RowHypers(row, trainer));
  return grid.Cell(row, hypers, trainer, salt);
}

absl::StatusOr<std::pair<GaussianSummary, GaussianSummary>> EstimateInOut(
    std::span<const ShadowView> shadows, size_t sample) {
  std::vector<double> in;
  std::vector<double> out;
  for (const ShadowView& s : shadows) {
    ((*s.membership)[sample] ? in : out).push_back((*s.scores)[sample]);
  }
  if (in.empty() || out.empty()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "insufficient shadows for pool sample ", sample, ": ", in.size(),
        " IN and ", out.size(), " OUT"));
  }
  MIAUDIT_ASSIGN_OR_RETURN(GaussianSummary in_fit, FitGaussian(in));
  MIAUDIT_ASSIGN_OR_RETURN(GaussianSummary out_fit, FitGaussian(out));
  return std::make_pair(in_fit, out_fit);
}

absl::StatusOr<std::vector<double>> LiraPoolScores(
    std::span<const double> target_scores, std::span<const ShadowView> shadows,
    VarianceMode mode, std::span<const uint64_t> sample_ids) {
  const size_t n = target_scores.size();
  for (const ShadowView& s : shadows) {
    if (s.scores->size() != n || s.membership->size() != n) {
      return absl::InternalError("shadow score vector does not cover the pool");
    }
  }
  std::vector<std::vector<double>> in(n);
  std::vector<std::vector<double>> out(n);
  for (const ShadowView& s : shadows) {
    for (size_t k = 0; k < n; ++k) {
      ((*s.membership)[k] ? in[k] : out[k]).push_back((*s.scores)[k]);
    }
  }
  std::optional<GlobalVariance> global;
  if (mode == VarianceMode::kGlobal) {
    double ss_in = 0.0, ss_out = 0.0, sum_in = 0.0, sum_out = 0.0;
    int64_t n_in = 0, n_out = 0;
    auto accumulate = [](const std::vector<double>& v, double& ss, double& sum,
                         int64_t& count) {
      if (v.empty()) return;
      const double mean = FitGaussian(v)->mean;
      for (double x : v) {
        ss += (x - mean) * (x - mean);
        sum += x;
      }
      count += static_cast<int64_t>(v.size());
    };
    for (size_t k = 0; k < n; ++k) {
      accumulate(in[k], ss_in, sum_in, n_in);
      accumulate(out[k], ss_out, sum_out, n_out);
    }
    if (n_in == 0 || n_out == 0) {
      return absl::FailedPreconditionError(
          "insufficient shadows: no IN or no OUT scores anywhere in the pool");
    }
    global = GlobalVariance{std::max(ss_in / n_in, kVarFloor),
                            std::max(ss_out / n_out, kVarFloor), sum_in / n_in,
                            sum_out / n_out};
  }
  std::vector<double> scores(n);
  for (size_t k = 0; k < n; ++k) {
    absl::StatusOr<double> s = LiraScore(target_scores[k], in[k], out[k], mode, global);
    if (!s.ok()) {
      return absl::Status(s.status().code(),
                          absl::StrCat(s.status().message(), " (sample_id ",
                                       sample_ids[k], ")"));
    }
    scores[k] = *s;
  }
  return scores;
}

absl::StatusOr<double> ShadowDivergence(std::span<const double> target_scores,
                                        std::span<const double> shadow_scores) {
  MIAUDIT_ASSIGN_OR_RETURN(GaussianSummary t, FitGaussian(target_scores));
  MIAUDIT_ASSIGN_OR_RETURN(GaussianSummary s, FitGaussian(shadow_scores));
  return KlDivergenceGaussians(t, s);
}

void SelectByMeanDivergence(KlSelection& selection) {
  selection.mean_divergence.clear();
  selection.winner = 0;
  for (size_t j = 0; j < selection.divergences.size(); ++j) {
    const std::vector<double>& phi = selection.divergences[j];
    const double mean =
        std::accumulate(phi.begin(), phi.end(), 0.0) / static_cast<double>(phi.size());
    selection.mean_divergence.push_back(mean);
    if (mean < selection.mean_divergence[selection.winner]) {
      selection.winner = static_cast<int>(j);
    }
  }
}

absl::StatusOr<KlSelection> KlLiraSelect(const Model& target,
                                         std::span<const HyperParams> candidates,
                                         std::span<const LabeledSet> shadow_sets,
                                         CellTrainer& trainer, uint64_t seed) {
  if (candidates.empty() || shadow_sets.empty()) {
    return absl::InvalidArgumentError("KL-LiRA needs C >= 1 and N >= 1");
  }
  KlSelection sel;
  sel.candidates.assign(candidates.begin(), candidates.end());
  sel.source_rows.assign(candidates.size(), -1);
  sel.divergences.assign(candidates.size(), std::vector<double>(shadow_sets.size()));
  std::vector<std::vector<double>> target_scores;
  for (const LabeledSet& set : shadow_sets) {
    target_scores.push_back(TrueClassScores(target, set));
  }
  const size_t pairs = candidates.size() * shadow_sets.size();
  MIAUDIT_RETURN_IF_ERROR(ParallelFor(pairs, trainer.jobs(), [&](size_t p) {
    const size_t j = p / shadow_sets.size();
    const size_t i = p % shadow_sets.size();
    const LabeledSet& set = shadow_sets[i];
    const uint64_t s = DeriveSeed(
        seed, absl::StrCat("kl/", ToHex(set.ContentDigest()), "/",
                           ToHex(candidates[j].ContentDigest())));
    absl::StatusOr<Model> shadow = trainer.Train(target.arch, set, candidates[j], s);
    if (!shadow.ok()) {
      return absl::Status(shadow.status().code(),
                          absl::StrCat("KL candidate ", j, " (",
                                       candidates[j].DebugString(),
                                       "): ", shadow.status().message()));
    }
    absl::StatusOr<double> phi =
        ShadowDivergence(target_scores[i], TrueClassScores(*shadow, set));
    if (!phi.ok()) return phi.status();
    sel.divergences[j][i] = *phi;
    return absl::OkStatus();
  }));
  SelectByMeanDivergence(sel);
  return sel;
}

absl::StatusOr<std::vector<HyperParams>> AccLiraHypers(
    const Architecture& arch, std::span<const LabeledSet> shadow_sets,
    const SearchSpace& space, const std::optional<DpSpec>& dp, uint64_t hpo_seed,
    CellTrainer& trainer) {
  std::vector<HyperParams> out(shadow_sets.size());
  MIAUDIT_RETURN_IF_ERROR(ParallelFor(shadow_sets.size(), trainer.jobs(), [&](size_t i) {
    const uint64_t seed = DeriveSeed(
        hpo_seed, absl::StrCat("hpo/", ToHex(shadow_sets[i].ContentDigest())));
    absl::StatusOr<HpoResult> r =
        RunHpo(arch, shadow_sets[i], space, dp, seed, trainer.AsTrainFn());
    if (!r.ok()) return r.status();
    out[i] = r->best;
    return absl::OkStatus();
  }));
  return out;
}

AttackResult ThresholdAttack(const Model& target, const LabeledSet& pool,
                             std::span<const uint8_t> is_member) {
  AttackResult result;
  result.strategy = Strategy::kThreshold;
  result.sample_ids.assign(pool.ids().begin(), pool.ids().end());
  result.scores = TrueClassScores(target, pool);
  result.is_member.assign(is_member.begin(), is_member.end());
  result.models_trained = 0;
  return result;
}

absl::StatusOr<std::vector<AttackResult>> RunCampaign(
    MiaGrid& grid, CellTrainer& trainer, Strategy strategy,
    std::span<const int> targets, const CampaignParams& params, uint64_t seed) {
  const int m = grid.config().m;
  MIAUDIT_ASSIGN_OR_RETURN(const VarianceMode mode,
                           ResolveVarianceMode(params.variance_mode, m));
  if (strategy == Strategy::kKl) {
    if (params.n < 1 || (!params.kl_target_candidate && params.c < 1)) {
      return absl::InvalidArgumentError("KL-LiRA needs C >= 1 and N >= 1");
    }
    if (!params.kl_target_candidate && params.c > m) {
      return absl::InvalidArgumentError(absl::StrCat(
          "KL-LiRA draws C+1 seed rows from the grid; C=", params.c,
          " needs M >= C, got M=", m));
    }
  }
  MIAUDIT_RETURN_IF_ERROR(PrepareTargets(grid, trainer, targets, params.target_salt));

  std::vector<AttackResult> results;
  for (int target : targets) {
    const int64_t before = trainer.models_trained();
    MIAUDIT_ASSIGN_OR_RETURN(const HyperParams target_hypers,
                             grid.RowHypers(target, trainer));
    MIAUDIT_ASSIGN_OR_RETURN(const ShadowView target_view,
                             grid.Cell(target, target_hypers, trainer, params.target_salt));
    AttackResult result;
    result.target = target;
    result.strategy = strategy;
    result.target_hypers = target_hypers;
    result.sample_ids.assign(grid.pool().ids().begin(), grid.pool().ids().end());
    result.is_member = *grid.row_membership(target);

    const std::vector<int> shadow_rows = OtherRows(grid.rows(), target);
    std::vector<ShadowView> shadows;
    switch (strategy) {
      case Strategy::kThreshold:
        result.scores = *target_view.scores;
        break;
      case Strategy::kLira: {
        MIAUDIT_ASSIGN_OR_RETURN(shadows,
                                 Cells(grid, trainer, shadow_rows, target_hypers));
        break;
      }
      case Strategy::kAcc: {
        MIAUDIT_RETURN_IF_ERROR(PrepareRowHpo(grid, trainer, shadow_rows));
        shadows.resize(shadow_rows.size());
        MIAUDIT_RETURN_IF_ERROR(
            ParallelFor(shadow_rows.size(), trainer.jobs(), [&](size_t k) {
              absl::StatusOr<HyperParams> h = grid.RowHypers(shadow_rows[k], trainer);
              if (!h.ok()) return h.status();
              absl::StatusOr<ShadowView> v = grid.Cell(shadow_rows[k], *h, trainer);
              if (!v.ok()) return v.status();
              shadows[k] = *std::move(v);
              return absl::OkStatus();
            }));
        break;
      }
      case Strategy::kKl: {
        MIAUDIT_ASSIGN_OR_RETURN(KlOutcome outcome,
                                 RunKl(grid, trainer, target, target_view,
                                       target_hypers, params, seed));
        shadows = std::move(outcome.shadows);
        result.kl = std::move(outcome.selection);
        break;
      }
    }
    if (strategy != Strategy::kThreshold) {
      MIAUDIT_ASSIGN_OR_RETURN(result.scores,
                               LiraPoolScores(*target_view.scores, shadows, mode,
                                              result.sample_ids));
    }
    result.models_trained = trainer.models_trained() - before;
    results.push_back(std::move(result));
  }
  return results;
}

std::string AttackResultsCsv(std::span<const AttackResult> results) {
  std::string out = "target,sample_id,score,is_member\n";
  for (const AttackResult& r : results) {
    for (size_t k = 0; k < r.scores.size(); ++k) {
      absl::StrAppendFormat(&out, "%d,%d,%.17g,%d\n", r.target, r.sample_ids[k],
                            r.scores[k], r.is_member[k] ? 1 : 0);
    }
  }
  return out;
}

}  // namespace miaudit

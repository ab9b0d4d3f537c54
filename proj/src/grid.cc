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

#include "miaudit/grid.h"

#include <utility>

#include "absl/strings/str_cat.h"
#include "miaudit/seeding.h"
#include "miaudit/status_macros.h"

namespace miaudit {

// CellTrainer

absl::StatusOr<HyperParams> CellTrainer::Resolve(const HyperParams& hypers,
                                                 int64_t n) {
  if (!dp_ || !hypers.is_private()) return hypers;
  const auto key = std::make_tuple(n, hypers.batch_size, hypers.epochs);
  HyperParams resolved = hypers;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = sigma_memo_.find(key);
    if (it != sigma_memo_.end()) {
      resolved.noise_multiplier = it->second;
      return resolved;
    }
  }
  MIAUDIT_ASSIGN_OR_RETURN(
      const double sigma,
      CalibrateNoise(*dp_, TrainingSteps(n, hypers), SamplingRate(n, hypers)));
  {
    std::lock_guard<std::mutex> lock(mu_);
    sigma_memo_.emplace(key, sigma);
  }
  resolved.noise_multiplier = sigma;
  return resolved;
}

absl::StatusOr<Model> CellTrainer::Train(const Architecture& arch,
                                         const LabeledSet& data,
                                         const HyperParams& hypers,
                                         uint64_t seed) {
  MIAUDIT_ASSIGN_OR_RETURN(const HyperParams resolved,
                           Resolve(hypers, static_cast<int64_t>(data.size())));
  const Digest key = TrainHash(arch, data, resolved, seed);
  MIAUDIT_ASSIGN_OR_RETURN(std::optional<Model> cached, GetModel(*store_, key));
  Touch(ObjectKind::kModel, key);
  if (cached) {
    if (cached->train_hash != key || !(cached->arch == arch)) {
      return absl::DataLossError(
          absl::StrCat("cached model ", ToHex(key), " does not match its key"));
    }
    return *std::move(cached);
  }
  MIAUDIT_ASSIGN_OR_RETURN(Model model, miaudit::Train(arch, data, resolved, seed));
  ++trained_;
  MIAUDIT_RETURN_IF_ERROR(PutModel(*store_, key, model));
  return model;
}

TrainFn CellTrainer::AsTrainFn() {
  return [this](const Architecture& arch, const LabeledSet& data,
                const HyperParams& hypers, uint64_t seed) {
    return Train(arch, data, hypers, seed);
  };
}

absl::StatusOr<std::vector<double>> CellTrainer::Scores(const Model& model,
                                                        const LabeledSet& data) {
  ByteWriter w;
  w.String("scores/v1");
  w.Bytes(model.train_hash);
  w.Bytes(data.ContentDigest());
  const Digest key = w.Hash();
  MIAUDIT_ASSIGN_OR_RETURN(std::optional<std::vector<double>> cached,
                           GetScores(*store_, key));
  Touch(ObjectKind::kScores, key);
  if (cached) {
    if (cached->size() != data.size()) {
      return absl::DataLossError(absl::StrCat("cached score vector ", ToHex(key),
                                              " has the wrong length"));
    }
    return *std::move(cached);
  }
  std::vector<double> scores = TrueClassScores(model, data);
  MIAUDIT_RETURN_IF_ERROR(PutScores(*store_, key, scores));
  return scores;
}

absl::Status CellTrainer::PutObject(ObjectKind kind, const Digest& key,
                                   absl::string_view bytes) {
  MIAUDIT_RETURN_IF_ERROR(store_->Put(kind, key, bytes));
  Touch(kind, key);
  return absl::OkStatus();
}

void CellTrainer::Touch(ObjectKind kind, const Digest& key) {
  std::lock_guard<std::mutex> lock(mu_);
  touched_.emplace(kind, key);
}

std::vector<std::pair<ObjectKind, Digest>> CellTrainer::TouchedObjects() const {
  std::lock_guard<std::mutex> lock(mu_);
  return {touched_.begin(), touched_.end()};
}

// Grid configuration

absl::string_view HpoSourceName(HpoSource source) {
  return source == HpoSource::kTd ? "td" : "ed";
}

absl::StatusOr<HpoSource> ParseHpoSource(absl::string_view name) {
  if (name == "td") return HpoSource::kTd;
  if (name == "ed") return HpoSource::kEd;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown hpo_source '", name, "' (expected td|ed)"));
}

absl::Status GridConfig::Validate() const {
  MIAUDIT_RETURN_IF_ERROR(data.Validate());
  if (arch.dim != data.dim || arch.classes != data.classes) {
    return absl::InvalidArgumentError(
        "architecture dim/classes must match the data spec");
  }
  MIAUDIT_RETURN_IF_ERROR(arch.Validate());
  if (m < 1) return absl::InvalidArgumentError(absl::StrCat("M must be >= 1, got ", m));
  if (shots < 1) {
    return absl::InvalidArgumentError(absl::StrCat("S must be >= 1, got ", shots));
  }
  if (hpo_source == HpoSource::kEd && m + 1 > kMaxExternalSets) {
    return absl::InvalidArgumentError(absl::StrCat(
        "ed HPO needs one external set per row; at most ", kMaxExternalSets,
        " rows are supported"));
  }
  if (dp) MIAUDIT_RETURN_IF_ERROR(dp->Validate());
  if (space.trials < 1 || space.epochs < 1) {
    return absl::InvalidArgumentError("search space needs trials >= 1 and epochs >= 1");
  }
  return absl::OkStatus();
}

// MiaGrid

absl::StatusOr<std::unique_ptr<MiaGrid>> MiaGrid::Build(const GridConfig& config) {
  MIAUDIT_RETURN_IF_ERROR(config.Validate());
  std::unique_ptr<MiaGrid> grid(new MiaGrid(config));
  MIAUDIT_ASSIGN_OR_RETURN(grid->pool_,
                           SamplePopulation(config.data, config.pool_size(), "pool"));
  MIAUDIT_ASSIGN_OR_RETURN(grid->mask_,
                           BuildGridDatasets(grid->pool_, config.m, config.data.seed));
  std::vector<int64_t> sizes;
  for (int r = 0; r < grid->rows(); ++r) {
    const std::vector<size_t> idx = grid->mask_.RowIndices(r);
    if (static_cast<int64_t>(idx.size()) < std::max<int64_t>(kMinHpoDatasetSize,
                                                             config.space.batch_min)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "grid row ", r, " has only ", idx.size(),
          " samples; increase S so every row can be split for HPO"));
    }
    grid->row_sets_.push_back(grid->pool_.Subset(idx));
    grid->row_digests_.push_back(grid->row_sets_.back().ContentDigest());
    auto bits = std::make_shared<std::vector<uint8_t>>(grid->pool_.size(), 0);
    for (size_t i : idx) (*bits)[i] = 1;
    grid->row_membership_.push_back(std::move(bits));
    sizes.push_back(static_cast<int64_t>(idx.size()));
  }
  if (config.hpo_source == HpoSource::kEd) {
    MIAUDIT_ASSIGN_OR_RETURN(
        grid->external_sets_,
        SampleExternalDatasets(config.data, grid->rows(), sizes,
                               DataStream{"ed-hpo", IdNamespace::kExternal}));
  }
  return grid;
}

const LabeledSet& MiaGrid::hpo_set(int row) const {
  return config_.hpo_source == HpoSource::kTd ? row_sets_[row] : external_sets_[row];
}

uint64_t MiaGrid::HpoSeed(int row) const {
  return DeriveSeed(config_.hpo_seed,
                    absl::StrCat("hpo/", ToHex(hpo_set(row).ContentDigest())));
}

absl::StatusOr<std::shared_ptr<const HpoResult>> MiaGrid::RowHpo(
    int row, CellTrainer& trainer) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = hpo_.find(row);
    if (it != hpo_.end()) return it->second;
  }
  MIAUDIT_ASSIGN_OR_RETURN(
      HpoResult result, RunHpo(config_.arch, hpo_set(row), config_.space, config_.dp,
                               HpoSeed(row), trainer.AsTrainFn()));
  ByteWriter key;
  key.String("hpo/v2");
  key.Bytes(config_.arch.ContentDigest());
  key.Bytes(hpo_set(row).ContentDigest());
  key.U64(HpoSeed(row));
  const SearchSpace& space = config_.space;
  key.F64(space.lr_min);
  key.F64(space.lr_max);
  key.U32(static_cast<uint32_t>(space.batch_min));
  key.F64(space.clip_min);
  key.F64(space.clip_max);
  key.U32(static_cast<uint32_t>(space.epochs));
  key.U32(static_cast<uint32_t>(space.trials));
  key.U8(config_.dp.has_value());
  if (config_.dp.has_value()) {
    key.F64(config_.dp->epsilon);
    key.F64(config_.dp->delta);
  }
  const std::string record =
      absl::StrCat(HpoTrialsCsv(result), "best=", HyperParamsJson(result.best), "\n");
  MIAUDIT_RETURN_IF_ERROR(trainer.PutObject(ObjectKind::kHpo, key.Hash(), record));
  auto shared = std::make_shared<const HpoResult>(std::move(result));
  std::lock_guard<std::mutex> lock(mu_);
  return hpo_.try_emplace(row, std::move(shared)).first->second;
}

absl::StatusOr<HyperParams> MiaGrid::RowHypers(int row, CellTrainer& trainer) {
  MIAUDIT_ASSIGN_OR_RETURN(std::shared_ptr<const HpoResult> hpo, RowHpo(row, trainer));
  return hpo->best;
}

uint64_t MiaGrid::CellSeed(int row, const HyperParams& hypers,
                           absl::string_view salt) const {
  return DeriveSeed(config_.train_seed,
                    absl::StrCat("cell/", ToHex(row_digests_[row]), "/",
                                 ToHex(hypers.ContentDigest()), "/", salt));
}

absl::StatusOr<Model> MiaGrid::CellModel(int row, const HyperParams& hypers,
                                         CellTrainer& trainer, absl::string_view salt) {
  return trainer.Train(config_.arch, row_sets_[row], hypers,
                       CellSeed(row, hypers, salt));
}

absl::StatusOr<ShadowView> MiaGrid::Cell(int row, const HyperParams& hypers,
                                         CellTrainer& trainer, absl::string_view salt) {
  const std::string key = absl::StrCat(row, "/", ToHex(hypers.ContentDigest()), "/", salt);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cells_.find(key);
    if (it != cells_.end()) return it->second;
  }
  MIAUDIT_ASSIGN_OR_RETURN(Model model, CellModel(row, hypers, trainer, salt));
  MIAUDIT_ASSIGN_OR_RETURN(std::vector<double> scores, trainer.Scores(model, pool_));
  ShadowView view;
  view.scores = std::make_shared<const std::vector<double>>(std::move(scores));
  view.membership = row_membership_[row];
  view.model = model.train_hash;
  std::lock_guard<std::mutex> lock(mu_);
  return cells_.try_emplace(key, std::move(view)).first->second;
}

absl::StatusOr<ShadowView> MiaGrid::HpoTrialShadow(int row, CellTrainer& trainer) {
  if (config_.hpo_source != HpoSource::kTd) {
    return absl::FailedPreconditionError(
        "HPO trial models are only pool shadows when HPO runs on the grid rows");
  }
  const std::string key = absl::StrCat(row, "/hpo-trial");
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cells_.find(key);
    if (it != cells_.end()) return it->second;
  }
  MIAUDIT_ASSIGN_OR_RETURN(std::shared_ptr<const HpoResult> hpo, RowHpo(row, trainer));
  MIAUDIT_ASSIGN_OR_RETURN(std::vector<double> scores,
                           trainer.Scores(hpo->best_model, pool_));
  auto bits = std::make_shared<std::vector<uint8_t>>(pool_.size(), 0);
  for (uint64_t id : hpo->train_ids) {
    // Pool ids equal pool indices.
    if (id >= pool_.size() || pool_.id(id) != id) {
      return absl::InternalError(absl::StrCat("HPO split id ", id, " is not a pool id"));
    }
    (*bits)[id] = 1;
  }
  ShadowView view;
  view.scores = std::make_shared<const std::vector<double>>(std::move(scores));
  view.membership = std::move(bits);
  view.model = hpo->best_model.train_hash;
  std::lock_guard<std::mutex> lock(mu_);
  return cells_.try_emplace(key, std::move(view)).first->second;
}

}  // namespace miaudit

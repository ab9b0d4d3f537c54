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

#ifndef MIAUDIT_GRID_H_
#define MIAUDIT_GRID_H_

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "miaudit/accountant.h"
#include "miaudit/hpo.h"
#include "miaudit/model.h"
#include "miaudit/store.h"
#include "miaudit/synthdata.h"

namespace miaudit {

// Trains through the object store: a model whose train hash is already
// stored is loaded instead of retrained. Under a DP budget the noise
// multiplier is recalibrated for the size of each training set, because the
// step count and sampling rate depend on it. Thread-safe.
class CellTrainer {
 public:
  CellTrainer(ObjectStore* store, std::optional<DpSpec> dp, int jobs = 1)
      : store_(store), dp_(dp), jobs_(std::max(jobs, 1)) {}

  absl::StatusOr<Model> Train(const Architecture& arch, const LabeledSet& data,
                              const HyperParams& hypers, uint64_t seed);
  TrainFn AsTrainFn();

  // Hyperparameters as actually used on a set of `n` samples.
  absl::StatusOr<HyperParams> Resolve(const HyperParams& hypers, int64_t n);

  // TrueClassScores of `model` on `data`, cached under (train hash, data).
  absl::StatusOr<std::vector<double>> Scores(const Model& model,
                                             const LabeledSet& data);

  // Stores `bytes` and remembers the object as touched.
  absl::Status PutObject(ObjectKind kind, const Digest& key, absl::string_view bytes);

  // Every object read or written through this trainer, for manifests.
  std::vector<std::pair<ObjectKind, Digest>> TouchedObjects() const;

  // Cache misses so far, i.e. models actually trained.
  int64_t models_trained() const { return trained_.load(); }
  int jobs() const { return jobs_; }
  ObjectStore& store() { return *store_; }
  const std::optional<DpSpec>& dp() const { return dp_; }

 private:
  ObjectStore* store_;
  std::optional<DpSpec> dp_;
  int jobs_;
  void Touch(ObjectKind kind, const Digest& key);

  std::atomic<int64_t> trained_{0};
  mutable std::mutex mu_;
  std::set<std::pair<ObjectKind, Digest>> touched_;
  std::map<std::tuple<int64_t, int, int>, double> sigma_memo_;
};

enum class HpoSource { kTd, kEd };
absl::string_view HpoSourceName(HpoSource source);
absl::StatusOr<HpoSource> ParseHpoSource(absl::string_view name);

struct GridConfig {
  DataSpec data;  // data.seed drives pool, mask and external sets
  Architecture arch;
  int m = 16;
  int shots = 50;
  std::optional<DpSpec> dp;
  HpoSource hpo_source = HpoSource::kTd;
  SearchSpace space;
  uint64_t hpo_seed = 0;
  uint64_t train_seed = 0;

  absl::Status Validate() const;
  int64_t pool_size() const { return FewShotPoolSize(shots, data.classes); }
};

// One shadow: its pool scores and which pool samples it trained on.
struct ShadowView {
  std::shared_ptr<const std::vector<double>> scores;
  std::shared_ptr<const std::vector<uint8_t>> membership;
  Digest model{};
};

// The (M+1) x (M+1) lattice of (dataset, hyperparameter) cells. Datasets are
// fixed at construction; HPO results, models and pool score vectors are
// produced on demand through a CellTrainer and memoized. Accessors that
// compute are safe to call concurrently for distinct keys.
class MiaGrid {
 public:
  static absl::StatusOr<std::unique_ptr<MiaGrid>> Build(const GridConfig& config);

  const GridConfig& config() const { return config_; }
  int rows() const { return config_.m + 1; }
  const LabeledSet& pool() const { return pool_; }
  const MembershipMask& mask() const { return mask_; }
  const LabeledSet& row_set(int row) const { return row_sets_[row]; }
  // Data the row's HPO runs on: the row itself (td) or its external set (ed).
  const LabeledSet& hpo_set(int row) const;
  std::shared_ptr<const std::vector<uint8_t>> row_membership(int row) const {
    return row_membership_[row];
  }

  uint64_t HpoSeed(int row) const;
  absl::StatusOr<std::shared_ptr<const HpoResult>> RowHpo(int row,
                                                          CellTrainer& trainer);
  // RowHpo(row).best.
  absl::StatusOr<HyperParams> RowHypers(int row, CellTrainer& trainer);

  // Seed of cell (row, hypers). A non-empty salt gives an independent model
  // on the same cell (used to train paired targets).
  uint64_t CellSeed(int row, const HyperParams& hypers,
                    absl::string_view salt = "") const;

  // Trains or loads cell (row, hypers) and returns its pool scores.
  absl::StatusOr<ShadowView> Cell(int row, const HyperParams& hypers,
                                  CellTrainer& trainer, absl::string_view salt = "");
  absl::StatusOr<Model> CellModel(int row, const HyperParams& hypers,
                                  CellTrainer& trainer, absl::string_view salt = "");

  // The winning HPO trial model of `row` as a shadow: it was fit on the 70%
  // split, so only those samples count as members. td grids only.
  absl::StatusOr<ShadowView> HpoTrialShadow(int row, CellTrainer& trainer);

 private:
  explicit MiaGrid(GridConfig config) : config_(std::move(config)) {}

  GridConfig config_;
  LabeledSet pool_;
  MembershipMask mask_;
  std::vector<LabeledSet> row_sets_;
  std::vector<Digest> row_digests_;
  std::vector<LabeledSet> external_sets_;
  std::vector<std::shared_ptr<const std::vector<uint8_t>>> row_membership_;

  mutable std::mutex mu_;
  std::map<int, std::shared_ptr<const HpoResult>> hpo_;
  std::map<std::string, ShadowView> cells_;
};

}  // namespace miaudit

#endif  // MIAUDIT_GRID_H_

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

#ifndef MIAUDIT_HPO_H_
#define MIAUDIT_HPO_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "miaudit/accountant.h"
#include "miaudit/model.h"
#include "miaudit/synthdata.h"

namespace miaudit {

// Signature of TRAIN. Callers can substitute a caching implementation.
using TrainFn = std::function<absl::StatusOr<Model>(
    const Architecture&, const LabeledSet&, const HyperParams&, uint64_t)>;

TrainFn DefaultTrainer();

// Random-search ranges. The batch upper bound is the size of the dataset
// handed to RunHpo.
struct SearchSpace {
  double lr_min = 1e-7;
  double lr_max = 1e-2;
  int batch_min = 10;
  double clip_min = 0.2;
  double clip_max = 10.0;
  int epochs = 40;
  int trials = 20;

  absl::Status Validate(int64_t dataset_size) const;
};

inline constexpr double kTrainFraction = 0.7;
inline constexpr int64_t kMinHpoDatasetSize = 10;

// Shuffled floor(0.7 n) / rest partition. If a class present in the data is
// missing from the train part, one of its validation rows is swapped with a
// train row of the most frequent train class.
absl::StatusOr<std::pair<LabeledSet, LabeledSet>> SplitTrainVal(
    const LabeledSet& dataset, uint64_t seed);

struct HpoTrial {
  HyperParams hypers;
  double val_accuracy = 0.0;
  std::string error;  // non-empty when training failed

  bool ok() const { return error.empty(); }
};

struct HpoResult {
  HyperParams best;
  int best_index = 0;
  std::vector<HpoTrial> trials;
  // The winning trial's model, fit on `train_ids`.
  Model best_model;
  std::vector<uint64_t> train_ids;

  double best_accuracy() const { return trials[best_index].val_accuracy; }
};

// T seeded trials: log-uniform lr, integer-uniform batch, log-uniform clip and
// a calibrated noise multiplier under `dp`. Each trial trains on the 70%
// split and is scored by top-1 accuracy on the 30% split; the first maximum
// wins. Failed trials are recorded and skipped.
absl::StatusOr<HpoResult> RunHpo(const Architecture& arch,
                                 const LabeledSet& dataset,
                                 const SearchSpace& space,
                                 const std::optional<DpSpec>& dp, uint64_t seed,
                                 const TrainFn& trainer = DefaultTrainer());

// Trial table with columns trial,lr,batch,clip,noise,val_acc.
std::string HpoTrialsCsv(const HpoResult& result);
// JSON object describing `best`.
std::string HyperParamsJson(const HyperParams& hypers);
absl::StatusOr<HyperParams> HyperParamsFromJson(absl::string_view json);

}  // namespace miaudit

#endif  // MIAUDIT_HPO_H_

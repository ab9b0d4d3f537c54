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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "json.hpp"
#include "miaudit/seeding.h"
#include "miaudit/status_macros.h"

namespace miaudit {
namespace {

double LogUniform(Rng& rng, double lo, double hi) {
  const double a = std::log(lo);
  const double b = std::log(hi);
  return std::exp(a + (b - a) * UniformUnit(rng));
}

}  // namespace

TrainFn DefaultTrainer() {
  return [](const Architecture& arch, const LabeledSet& data,
            const HyperParams& hypers, uint64_t seed) {
    return Train(arch, data, hypers, seed);
  };
}

absl::Status SearchSpace::Validate(int64_t dataset_size) const {
  if (!(lr_min > 0.0 && lr_min <= lr_max)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("invalid learning-rate range [%g, %g]", lr_min, lr_max));
  }
  if (!(clip_min > 0.0 && clip_min <= clip_max)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("invalid clip range [%g, %g]", clip_min, clip_max));
  }
  if (batch_min < 1 || batch_min > dataset_size) {
    return absl::InvalidArgumentError(absl::StrCat(
        "batch range [", batch_min, ", ", dataset_size, "] is empty"));
  }
  if (epochs < 1 || epochs > 200) {
    return absl::InvalidArgumentError(
        absl::StrCat("epochs must lie in [1, 200], got ", epochs));
  }
  if (trials < 1) {
    return absl::InvalidArgumentError(absl::StrCat("trials must be >= 1, got ", trials));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::pair<LabeledSet, LabeledSet>> SplitTrainVal(
    const LabeledSet& dataset, uint64_t seed) {
  const int64_t n = static_cast<int64_t>(dataset.size());
  if (n < kMinHpoDatasetSize) {
    return absl::InvalidArgumentError(absl::StrCat(
        "HPO needs at least ", kMinHpoDatasetSize, " samples, got ", n));
  }
  const size_t n_train = static_cast<size_t>(std::floor(kTrainFraction * n));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(DeriveSeed(seed, "split"));
  Shuffle(order, rng);

  std::map<int, int> train_counts;
  for (size_t k = 0; k < n_train; ++k) ++train_counts[dataset.label(order[k])];
  for (size_t k = n_train; k < order.size(); ++k) {
    const int label = dataset.label(order[k]);
    if (train_counts.count(label) > 0) continue;
    // Donor: the most frequent train class (lowest label on ties), last
    // occurrence in the train part.
    int donor = -1;
    int donor_count = 1;
    for (const auto& [c, count] : train_counts) {
      if (count > donor_count) {
        donor = c;
        donor_count = count;
      }
    }
    if (donor < 0) break;  // every train class is a singleton
    for (size_t t = n_train; t-- > 0;) {
      if (dataset.label(order[t]) == donor) {
        std::swap(order[t], order[k]);
        break;
      }
    }
    --train_counts[donor];
    train_counts[label] = 1;
  }

  std::vector<size_t> train_idx(order.begin(), order.begin() + n_train);
  std::vector<size_t> val_idx(order.begin() + n_train, order.end());
  return std::make_pair(dataset.Subset(train_idx), dataset.Subset(val_idx));
}

absl::StatusOr<HpoResult> RunHpo(const Architecture& arch,
                                 const LabeledSet& dataset,
                                 const SearchSpace& space,
                                 const std::optional<DpSpec>& dp, uint64_t seed,
                                 const TrainFn& trainer) {
  MIAUDIT_RETURN_IF_ERROR(space.Validate(static_cast<int64_t>(dataset.size())));
  if (dp) MIAUDIT_RETURN_IF_ERROR(dp->Validate());
  MIAUDIT_ASSIGN_OR_RETURN(auto split, SplitTrainVal(dataset, seed));
  const LabeledSet& train = split.first;
  const LabeledSet& val = split.second;
  const int64_t n_train = static_cast<int64_t>(train.size());

  HpoResult result;
  result.best_index = -1;
  double best_acc = -1.0;
  for (int t = 0; t < space.trials; ++t) {
    Rng rng(DeriveSeed(seed, "hpo-trial", static_cast<uint64_t>(t)));
    HpoTrial trial;
    trial.hypers.learning_rate = LogUniform(rng, space.lr_min, space.lr_max);
    trial.hypers.batch_size = static_cast<int>(
        UniformInt(rng, space.batch_min, static_cast<int64_t>(dataset.size())));
    trial.hypers.epochs = space.epochs;
    if (dp) {
      trial.hypers.clip_norm = LogUniform(rng, space.clip_min, space.clip_max);
      absl::StatusOr<double> sigma =
          CalibrateNoise(*dp, TrainingSteps(n_train, trial.hypers),
                         SamplingRate(n_train, trial.hypers));
      if (!sigma.ok()) {
        trial.error = std::string(sigma.status().message());
        trial.hypers.noise_multiplier = 0.0;
        result.trials.push_back(std::move(trial));
        continue;
      }
      trial.hypers.noise_multiplier = *sigma;
    }
    absl::StatusOr<Model> model =
        trainer(arch, train, trial.hypers,
                DeriveSeed(seed, "hpo-train", static_cast<uint64_t>(t)));
    if (!model.ok()) {
      trial.error = std::string(model.status().message());
    } else {
      trial.val_accuracy = Accuracy(*model, val);
      if (trial.val_accuracy > best_acc) {
        best_acc = trial.val_accuracy;
        result.best_index = t;
        result.best_model = *std::move(model);
      }
    }
    result.trials.push_back(std::move(trial));
  }
  if (result.best_index < 0) {
    std::vector<std::string> diagnostics;
    for (size_t t = 0; t < result.trials.size(); ++t) {
      diagnostics.push_back(absl::StrCat("trial ", t, " (",
                                         result.trials[t].hypers.DebugString(),
                                         "): ", result.trials[t].error));
    }
    return absl::InternalError(absl::StrCat("hpo failed, every trial errored: ",
                                            absl::StrJoin(diagnostics, "; ")));
  }
  result.best = result.trials[result.best_index].hypers;
  result.train_ids.assign(train.ids().begin(), train.ids().end());
  return result;
}

std::string HpoTrialsCsv(const HpoResult& result) {
  std::string out = "trial,lr,batch,clip,noise,val_acc\n";
  for (size_t t = 0; t < result.trials.size(); ++t) {
    const HpoTrial& trial = result.trials[t];
    const HyperParams& h = trial.hypers;
    absl::StrAppendFormat(
        &out, "%d,%.17g,%d,%s,%s,%s\n", t, h.learning_rate, h.batch_size,
        h.clip_norm ? absl::StrFormat("%.17g", *h.clip_norm) : "",
        h.noise_multiplier ? absl::StrFormat("%.17g", *h.noise_multiplier) : "",
        trial.ok() ? absl::StrFormat("%.17g", trial.val_accuracy) : "nan");
  }
  return out;
}

std::string HyperParamsJson(const HyperParams& hypers) {
  nlohmann::ordered_json j;
  j["learning_rate"] = hypers.learning_rate;
  j["batch_size"] = hypers.batch_size;
  j["epochs"] = hypers.epochs;
  if (hypers.is_private()) {
    j["clip_norm"] = *hypers.clip_norm;
    j["noise_multiplier"] = *hypers.noise_multiplier;
  }
  return j.dump(2);
}

absl::StatusOr<HyperParams> HyperParamsFromJson(absl::string_view json) {
  const nlohmann::json j = nlohmann::json::parse(json, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return absl::DataLossError("hyperparameter record is not a JSON object");
  }
  HyperParams h;
  try {
    h.learning_rate = j.at("learning_rate").get<double>();
    h.batch_size = j.at("batch_size").get<int>();
    h.epochs = j.at("epochs").get<int>();
    if (j.contains("clip_norm")) {
      h.clip_norm = j.at("clip_norm").get<double>();
      h.noise_multiplier = j.at("noise_multiplier").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::DataLossError(absl::StrCat("bad hyperparameter record: ", e.what()));
  }
  MIAUDIT_RETURN_IF_ERROR(h.Validate());
  return h;
}

}  // namespace miaudit

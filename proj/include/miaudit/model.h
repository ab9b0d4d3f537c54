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

#ifndef MIAUDIT_MODEL_H_
#define MIAUDIT_MODEL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "miaudit/digest.h"
#include "miaudit/synthdata.h"

namespace miaudit {

enum class ArchKind : uint32_t { kLinear = 0, kMlp = 1 };

absl::string_view ArchKindName(ArchKind kind);
absl::StatusOr<ArchKind> ParseArchKind(absl::string_view name);

// Softmax classifiers. The MLP has one tanh hidden layer.
struct Architecture {
  ArchKind kind = ArchKind::kLinear;
  int hidden_units = 0;  // mlp only
  int dim = 0;
  int classes = 0;

  static Architecture Linear(int dim, int classes) {
    return {ArchKind::kLinear, 0, dim, classes};
  }
  static Architecture Mlp(int dim, int hidden_units, int classes) {
    return {ArchKind::kMlp, hidden_units, dim, classes};
  }

  absl::Status Validate() const;
  size_t ParameterCount() const;
  Digest ContentDigest() const;
  bool operator==(const Architecture&) const = default;
};

// Training configuration. clip_norm and noise_multiplier are set together
// (DP-Adam) or not at all (Adam).
struct HyperParams {
  double learning_rate = 1e-3;
  int batch_size = 32;
  std::optional<double> clip_norm;
  std::optional<double> noise_multiplier;
  int epochs = 40;

  bool is_private() const { return clip_norm.has_value(); }
  absl::Status Validate() const;
  Digest ContentDigest() const;
  std::string DebugString() const;
  bool operator==(const HyperParams&) const = default;
};

struct Model {
  Architecture arch;
  std::vector<double> weights;
  Digest train_hash{};
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// Minibatch Adam on softmax cross-entropy. Each epoch visits a fresh seeded
// permutation in chunks of min(batch_size, |dataset|). In DP mode every
// per-example gradient is clipped to clip_norm and the clipped sum receives
// N(0, (noise_multiplier * clip_norm)^2) noise per coordinate before it is
// divided by the batch length. Fails with kInternal ("training diverged at
// step k") if a batch loss is not finite.
absl::StatusOr<Model> Train(const Architecture& arch, const LabeledSet& dataset,
                            const HyperParams& hypers, uint64_t seed);

// Number of optimizer steps and the sampling rate Train uses; the privacy
// accountant needs both.
int64_t TrainingSteps(int64_t dataset_size, const HyperParams& hypers);
double SamplingRate(int64_t dataset_size, const HyperParams& hypers);

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
std::vector<double> InitialWeights(const Architecture& arch, uint64_t seed);

// Identity of a training run: architecture, dataset content (ids, labels and
// features), hyperparameters and seed.
Digest TrainHash(const Architecture& arch, const LabeledSet& dataset,
                 const HyperParams& hypers, uint64_t seed);

// Softmax probabilities for one feature vector.
absl::StatusOr<std::vector<double>> PredictConfidence(
    const Model& model, std::span<const double> features);

inline constexpr double kLogitClamp = 1e-12;

// log(p / (1 - p)) with p clamped to [1e-12, 1 - 1e-12].
double LogitScore(double p);

// LogitScore of the true-class confidence for every sample of `data`,
// evaluated from the logit margin z_y - logsumexp_{k != y} z_k so that
// confident predictions keep full precision. Same clamp as LogitScore.
std::vector<double> TrueClassScores(const Model& model, const LabeledSet& data);

double Accuracy(const Model& model, const LabeledSet& data);

// Flat little-endian record: arch tag, dim, classes, hidden units (u32 each),
// weight count (u64), weights (f64), train_hash (32 bytes).
std::string SerializeModel(const Model& model);
absl::StatusOr<Model> DeserializeModel(absl::string_view bytes);

namespace internal {

// Cross-entropy loss of one example; writes its gradient into `grad`
// (overwriting). Exposed for gradient checks.
double LossAndGradient(const Architecture& arch, std::span<const double> w,
                       std::span<const double> x, int y, std::span<double> grad);

// Rescales `grad` to norm <= clip_norm. Returns the pre-clip norm.
double ClipToNorm(std::span<double> grad, double clip_norm);

// Raw network outputs for one example.
void Logits(const Architecture& arch, std::span<const double> w,
            std::span<const double> x, std::span<double> out);

}  // namespace internal
}  // namespace miaudit

#endif  // MIAUDIT_MODEL_H_

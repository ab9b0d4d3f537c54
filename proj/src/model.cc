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

#include "miaudit/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "miaudit/seeding.h"
#include "miaudit/status_macros.h"

namespace miaudit {
namespace {

double LogSumExp(std::span<const double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - top);
  return top + std::log(sum);
}

// Scratch buffers for one forward/backward pass.
class Network {
 public:
  explicit Network(const Architecture& arch)
      : arch_(arch),
        logits_(arch.classes),
        dz_(arch.classes),
        hidden_(arch.hidden_units),
        dhidden_(arch.hidden_units) {}

  std::span<const double> Forward(std::span<const double> w,
                                  std::span<const double> x) {
    const int dim = arch_.dim;
    const int classes = arch_.classes;
    if (arch_.kind == ArchKind::kLinear) {
      const double* bias = w.data() + static_cast<size_t>(classes) * dim;
      for (int c = 0; c < classes; ++c) {
        const double* row = w.data() + static_cast<size_t>(c) * dim;
        double acc = bias[c];
        for (int d = 0; d < dim; ++d) acc += row[d] * x[d];
        logits_[c] = acc;
      }
      return logits_;
    }
    const int h = arch_.hidden_units;
    const double* w1 = w.data();
    const double* b1 = w1 + static_cast<size_t>(h) * dim;
    const double* w2 = b1 + h;
    const double* b2 = w2 + static_cast<size_t>(classes) * h;
    for (int j = 0; j < h; ++j) {
      const double* row = w1 + static_cast<size_t>(j) * dim;
      double acc = b1[j];
      for (int d = 0; d < dim; ++d) acc += row[d] * x[d];
      hidden_[j] = std::tanh(acc);
    }
    for (int c = 0; c < classes; ++c) {
      const double* row = w2 + static_cast<size_t>(c) * h;
      double acc = b2[c];
      for (int j = 0; j < h; ++j) acc += row[j] * hidden_[j];
      logits_[c] = acc;
    }
    return logits_;
  }

  // Adds scale * d(loss)/dw to grad and returns the loss.
  double Accumulate(std::span<const double> w, std::span<const double> x,
                    int y, double scale, std::span<double> grad) {
    Forward(w, x);
    const int dim = arch_.dim;
    const int classes = arch_.classes;
    const double lse = LogSumExp(logits_);
    const double loss = lse - logits_[y];
    for (int c = 0; c < classes; ++c) {
      dz_[c] = scale * (std::exp(logits_[c] - lse) - (c == y ? 1.0 : 0.0));
    }
    if (arch_.kind == ArchKind::kLinear) {
      double* gbias = grad.data() + static_cast<size_t>(classes) * dim;
      for (int c = 0; c < classes; ++c) {
        double* grow = grad.data() + static_cast<size_t>(c) * dim;
        const double g = dz_[c];
        for (int d = 0; d < dim; ++d) grow[d] += g * x[d];
        gbias[c] += g;
      }
      return loss;
    }
    const int h = arch_.hidden_units;
    const double* w2 = w.data() + static_cast<size_t>(h) * dim + h;
    double* gw1 = grad.data();
    double* gb1 = gw1 + static_cast<size_t>(h) * dim;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + static_cast<size_t>(classes) * h;
    std::fill(dhidden_.begin(), dhidden_.end(), 0.0);
    for (int c = 0; c < classes; ++c) {
      const double g = dz_[c];
      const double* row = w2 + static_cast<size_t>(c) * h;
      double* grow = gw2 + static_cast<size_t>(c) * h;
      for (int j = 0; j < h; ++j) {
        grow[j] += g * hidden_[j];
        dhidden_[j] += g * row[j];
      }
      gb2[c] += g;
    }
    for (int j = 0; j < h; ++j) {
      const double da = dhidden_[j] * (1.0 - hidden_[j] * hidden_[j]);
      double* grow = gw1 + static_cast<size_t>(j) * dim;
      for (int d = 0; d < dim; ++d) grow[d] += da * x[d];
      gb1[j] += da;
    }
    return loss;
  }

 private:
  Architecture arch_;
  std::vector<double> logits_;
  std::vector<double> dz_;
  std::vector<double> hidden_;
  std::vector<double> dhidden_;
};

absl::Status CheckDataset(const Architecture& arch, const LabeledSet& data) {
  if (data.dim() != arch.dim) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dataset has dim ", data.dim(), " but architecture expects ", arch.dim));
  }
  for (int label : data.labels()) {
    if (label < 0 || label >= arch.classes) {
      return absl::InvalidArgumentError(absl::StrCat(
          "label ", label, " outside [0, ", arch.classes, ")"));
    }
  }
  return absl::OkStatus();
}

}  // namespace

absl::string_view ArchKindName(ArchKind kind) {
  return kind == ArchKind::kLinear ? "linear" : "mlp";
}

absl::StatusOr<ArchKind> ParseArchKind(absl::string_view name) {
  if (name == "linear") return ArchKind::kLinear;
  if (name == "mlp") return ArchKind::kMlp;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown architecture '", name, "' (expected linear|mlp)"));
}

absl::Status Architecture::Validate() const {
  if (dim < 1 || classes < 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "architecture needs dim >= 1 and classes >= 2, got dim=", dim,
        " classes=", classes));
  }
  if (kind == ArchKind::kMlp && hidden_units < 1) {
    return absl::InvalidArgumentError("mlp needs hidden_units >= 1");
  }
  return absl::OkStatus();
}

size_t Architecture::ParameterCount() const {
  const size_t d = dim;
  const size_t c = classes;
  if (kind == ArchKind::kLinear) return c * d + c;
  const size_t h = hidden_units;
  return h * d + h + c * h + c;
}

Digest Architecture::ContentDigest() const {
  ByteWriter w;
  w.String("arch/v1");
  w.U32(static_cast<uint32_t>(kind));
  w.U32(static_cast<uint32_t>(dim));
  w.U32(static_cast<uint32_t>(classes));
  w.U32(static_cast<uint32_t>(kind == ArchKind::kMlp ? hidden_units : 0));
  return w.Hash();
}

absl::Status HyperParams::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    return absl::InvalidArgumentError(
        absl::StrCat("learning_rate must be finite and positive, got ", learning_rate));
  }
  if (batch_size < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("batch_size must be >= 1, got ", batch_size));
  }
  if (epochs < 1) {
    return absl::InvalidArgumentError(absl::StrCat("epochs must be >= 1, got ", epochs));
  }
  if (clip_norm.has_value() != noise_multiplier.has_value()) {
    return absl::InvalidArgumentError(
        "clip_norm and noise_multiplier must be set together");
  }
  if (clip_norm && !(*clip_norm > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("clip_norm must be positive, got ", *clip_norm));
  }
  if (noise_multiplier && !(*noise_multiplier >= 0.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "noise_multiplier must be >= 0, got ", *noise_multiplier));
  }
  return absl::OkStatus();
}

Digest HyperParams::ContentDigest() const {
  ByteWriter w;
  w.String("hypers/v1");
  w.F64(learning_rate);
  w.U32(static_cast<uint32_t>(batch_size));
  w.U32(static_cast<uint32_t>(epochs));
  w.U8(is_private() ? 1 : 0);
  if (is_private()) {
    w.F64(*clip_norm);
    w.F64(*noise_multiplier);
  }
  return w.Hash();
}

std::string HyperParams::DebugString() const {
  std::string out = absl::StrFormat("lr=%.6g batch=%d epochs=%d", learning_rate,
                                    batch_size, epochs);
  if (is_private()) {
    absl::StrAppendFormat(&out, " clip=%.6g noise=%.6g", *clip_norm,
                          *noise_multiplier);
  }
  return out;
}

int64_t TrainingSteps(int64_t dataset_size, const HyperParams& hypers) {
  const int64_t batch = std::min<int64_t>(hypers.batch_size, dataset_size);
  return hypers.epochs * ((dataset_size + batch - 1) / batch);
}

double SamplingRate(int64_t dataset_size, const HyperParams& hypers) {
  const int64_t batch = std::min<int64_t>(hypers.batch_size, dataset_size);
  return static_cast<double>(batch) / static_cast<double>(dataset_size);
}

std::vector<double> InitialWeights(const Architecture& arch, uint64_t seed) {
  std::vector<double> w(arch.ParameterCount(), 0.0);
  Rng rng(seed);
  auto fill = [&](size_t offset, size_t count, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (size_t i = 0; i < count; ++i) {
      w[offset + i] = bound * (2.0 * UniformUnit(rng) - 1.0);
    }
  };
  const size_t d = arch.dim;
  const size_t c = arch.classes;
  if (arch.kind == ArchKind::kLinear) {
    fill(0, c * d, arch.dim);
  } else {
    const size_t h = arch.hidden_units;
    fill(0, h * d, arch.dim);
    fill(h * d + h, c * h, arch.hidden_units);
  }
  return w;
}

Digest TrainHash(const Architecture& arch, const LabeledSet& dataset,
                 const HyperParams& hypers, uint64_t seed) {
  ByteWriter w;
  w.String("train/v1");
  w.Bytes(arch.ContentDigest());
  w.Bytes(dataset.ContentDigest());
  w.Bytes(hypers.ContentDigest());
  w.U64(seed);
  return w.Hash();
}

absl::StatusOr<Model> Train(const Architecture& arch, const LabeledSet& dataset,
                            const HyperParams& hypers, uint64_t seed) {
  MIAUDIT_RETURN_IF_ERROR(arch.Validate());
  MIAUDIT_RETURN_IF_ERROR(hypers.Validate());
  if (dataset.empty()) {
    return absl::InvalidArgumentError("cannot train on an empty dataset");
  }
  MIAUDIT_RETURN_IF_ERROR(CheckDataset(arch, dataset));

  Model model;
  model.arch = arch;
  model.weights = InitialWeights(arch, DeriveSeed(seed, "init"));
  model.train_hash = TrainHash(arch, dataset, hypers, seed);

  const size_t n = dataset.size();
  const size_t params = model.weights.size();
  const size_t batch = std::min<size_t>(hypers.batch_size, n);
  const bool dp = hypers.is_private();
  const double noise_std = dp ? *hypers.noise_multiplier * *hypers.clip_norm : 0.0;

  Network net(arch);
  std::vector<double> grad(params);
  std::vector<double> example_grad(dp ? params : 0);
  std::vector<double> m1(params, 0.0);
  std::vector<double> m2(params, 0.0);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng batch_rng(DeriveSeed(seed, "batches"));
  Rng noise_rng(DeriveSeed(seed, "dp-noise"));

  double beta1_pow = 1.0;
  double beta2_pow = 1.0;
  int64_t step = 0;
  for (int epoch = 0; epoch < hypers.epochs; ++epoch) {
    Shuffle(order, batch_rng);
    for (size_t start = 0; start < n; start += batch) {
      const size_t len = std::min(batch, n - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0.0;
      if (dp) {
        for (size_t k = start; k < start + len; ++k) {
          std::fill(example_grad.begin(), example_grad.end(), 0.0);
          loss += net.Accumulate(model.weights, dataset.features(order[k]),
                                 dataset.label(order[k]), 1.0, example_grad);
          internal::ClipToNorm(example_grad, *hypers.clip_norm);
          for (size_t p = 0; p < params; ++p) grad[p] += example_grad[p];
        }
        const double inv = 1.0 / static_cast<double>(len);
        for (size_t p = 0; p < params; ++p) {
          grad[p] = (grad[p] + noise_std * StandardNormal(noise_rng)) * inv;
        }
      } else {
        const double inv = 1.0 / static_cast<double>(len);
        for (size_t k = start; k < start + len; ++k) {
          loss += net.Accumulate(model.weights, dataset.features(order[k]),
                                 dataset.label(order[k]), inv, grad);
        }
      }
      if (!std::isfinite(loss)) {
        return absl::InternalError(
            absl::StrCat("training diverged at step ", step));
      }
      ++step;
      beta1_pow *= kAdamBeta1;
      beta2_pow *= kAdamBeta2;
      const double c1 = 1.0 / (1.0 - beta1_pow);
      const double c2 = 1.0 / (1.0 - beta2_pow);
      for (size_t p = 0; p < params; ++p) {
        m1[p] = kAdamBeta1 * m1[p] + (1.0 - kAdamBeta1) * grad[p];
        m2[p] = kAdamBeta2 * m2[p] + (1.0 - kAdamBeta2) * grad[p] * grad[p];
        model.weights[p] -= hypers.learning_rate * (m1[p] * c1) /
                            (std::sqrt(m2[p] * c2) + kAdamEps);
      }
    }
  }
  for (double v : model.weights) {
    if (!std::isfinite(v)) {
      return absl::InternalError(
          absl::StrCat("training diverged at step ", step, " (non-finite weights)"));
    }
  }
  return model;
}

absl::StatusOr<std::vector<double>> PredictConfidence(
    const Model& model, std::span<const double> features) {
  if (features.size() != static_cast<size_t>(model.arch.dim)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "feature vector has length ", features.size(), ", model expects ",
        model.arch.dim));
  }
  std::vector<double> probs(model.arch.classes);
  internal::Logits(model.arch, model.weights, features, probs);
  const double lse = LogSumExp(probs);
  for (double& v : probs) v = std::exp(v - lse);
  return probs;
}

double LogitScore(double p) {
  // Clamp in logit space: 1 - kLogitClamp is not exactly representable.
  static const double kLimit = std::log1p(-kLogitClamp) - std::log(kLogitClamp);
  if (!(p > 0.0)) return -kLimit;
  return std::clamp(std::log(p) - std::log1p(-p), -kLimit, kLimit);
}

std::vector<double> TrueClassScores(const Model& model, const LabeledSet& data) {
  static const double kLow = LogitScore(0.0);
  static const double kHigh = LogitScore(1.0);
  Network net(model.arch);
  std::vector<double> scores(data.size());
  std::vector<double> others(model.arch.classes - 1);
  for (size_t i = 0; i < data.size(); ++i) {
    std::span<const double> z = net.Forward(model.weights, data.features(i));
    const int y = data.label(i);
    size_t k = 0;
    for (int c = 0; c < model.arch.classes; ++c) {
      if (c != y) others[k++] = z[c];
    }
    scores[i] = std::clamp(z[y] - LogSumExp(others), kLow, kHigh);
  }
  return scores;
}

double Accuracy(const Model& model, const LabeledSet& data) {
  if (data.empty()) return 0.0;
  Network net(model.arch);
  size_t correct = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    std::span<const double> z = net.Forward(model.weights, data.features(i));
    const auto best = std::max_element(z.begin(), z.end()) - z.begin();
    if (best == data.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::string SerializeModel(const Model& model) {
  ByteWriter w;
  w.U32(static_cast<uint32_t>(model.arch.kind));
  w.U32(static_cast<uint32_t>(model.arch.dim));
  w.U32(static_cast<uint32_t>(model.arch.classes));
  w.U32(static_cast<uint32_t>(model.arch.hidden_units));
  w.U64(model.weights.size());
  w.F64s(model.weights);
  w.Bytes(model.train_hash);
  return w.Release();
}

absl::StatusOr<Model> DeserializeModel(absl::string_view bytes) {
  ByteReader r(bytes);
  Model model;
  MIAUDIT_ASSIGN_OR_RETURN(const uint32_t tag, r.U32());
  if (tag > 1) {
    return absl::DataLossError(absl::StrCat("unknown architecture tag ", tag));
  }
  model.arch.kind = static_cast<ArchKind>(tag);
  MIAUDIT_ASSIGN_OR_RETURN(const uint32_t dim, r.U32());
  MIAUDIT_ASSIGN_OR_RETURN(const uint32_t classes, r.U32());
  MIAUDIT_ASSIGN_OR_RETURN(const uint32_t hidden, r.U32());
  model.arch.dim = static_cast<int>(dim);
  model.arch.classes = static_cast<int>(classes);
  model.arch.hidden_units = static_cast<int>(hidden);
  if (!model.arch.Validate().ok()) {
    return absl::DataLossError("model record has invalid architecture");
  }
  MIAUDIT_ASSIGN_OR_RETURN(const uint64_t count, r.U64());
  if (count != model.arch.ParameterCount() || r.remaining() != count * 8 + 32) {
    return absl::DataLossError(absl::StrCat(
        "model record size mismatch: ", count, " weights declared, ",
        r.remaining(), " bytes left"));
  }
  model.weights.resize(count);
  for (double& v : model.weights) {
    MIAUDIT_ASSIGN_OR_RETURN(v, r.F64());
  }
  MIAUDIT_ASSIGN_OR_RETURN(model.train_hash, r.ReadDigest());
  return model;
}

namespace internal {

double LossAndGradient(const Architecture& arch, std::span<const double> w,
                       std::span<const double> x, int y, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  Network net(arch);
  return net.Accumulate(w, x, y, 1.0, grad);
}

double ClipToNorm(std::span<double> grad, double clip_norm) {
  double norm2 = 0.0;
  for (double g : grad) norm2 += g * g;
  const double norm = std::sqrt(norm2);
  if (norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (double& g : grad) g *= scale;
  }
  return norm;
}

void Logits(const Architecture& arch, std::span<const double> w,
            std::span<const double> x, std::span<double> out) {
  Network net(arch);
  std::span<const double> z = net.Forward(w, x);
  std::copy(z.begin(), z.end(), out.begin());
}

}  // namespace internal
}  // namespace miaudit

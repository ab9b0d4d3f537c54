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

#include <cmath>
#include <numeric>
#include <random>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "miaudit/synthdata.h"

namespace miaudit {
namespace {

using ::testing::DoubleNear;
using ::testing::Pointwise;

LabeledSet Toy(int n, int dim = 5, int classes = 3, uint64_t seed = 4) {
  DataSpec spec;
  spec.dim = dim;
  spec.classes = classes;
  spec.class_separation = 3.0;
  spec.seed = seed;
  return *SamplePopulation(spec, n, "model-test");
}

double Loss(const Architecture& arch, std::span<const double> w, std::span<const double> x,
            int y) {
  std::vector<double> z(arch.classes);
  internal::Logits(arch, w, x, z);
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0;
  for (double v : z) s += std::exp(v - mx);
  return mx + std::log(s) - z[y];
}

// Norm-wise relative error of the analytic gradient against central
// differences of a loss recomputed from the forward pass alone.
double GradientError(const Architecture& arch, uint64_t seed) {
  const LabeledSet data = Toy(6, arch.dim, arch.classes, seed);
  std::vector<double> w = InitialWeights(arch, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 0.5);
  for (double& v : w) v += g(rng);
  double worst = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    std::vector<double> grad(w.size());
    const double loss = internal::LossAndGradient(arch, w, data.features(i), data.label(i), grad);
    EXPECT_NEAR(loss, Loss(arch, w, data.features(i), data.label(i)), 1e-12);
    double num = 0, den = 0;
    for (size_t p = 0; p < w.size(); ++p) {
      const double h = 1e-6;
      std::vector<double> up = w, down = w;
      up[p] += h;
      down[p] -= h;
      const double fd = (Loss(arch, up, data.features(i), data.label(i)) -
                         Loss(arch, down, data.features(i), data.label(i))) /
                        (2 * h);
      num += (fd - grad[p]) * (fd - grad[p]);
      den += grad[p] * grad[p];
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  return worst;
}

TEST(GradientTest, LinearMatchesFiniteDifferences) {
  EXPECT_LE(GradientError(Architecture::Linear(5, 3), 1), 1e-5);
}

TEST(GradientTest, MlpMatchesFiniteDifferences) {
  EXPECT_LE(GradientError(Architecture::Mlp(5, 7, 3), 2), 1e-5);
}

TEST(ClipToNormTest, ScalesOnlyLargeGradients) {
  std::vector<double> g = {3, 4};
  EXPECT_DOUBLE_EQ(internal::ClipToNorm(g, 1.0), 5.0);
  EXPECT_THAT(g, Pointwise(DoubleNear(1e-15), std::vector<double>{0.6, 0.8}));
  std::vector<double> small = {0.1, 0.1};
  internal::ClipToNorm(small, 1.0);
  EXPECT_THAT(small, Pointwise(DoubleNear(0), std::vector<double>{0.1, 0.1}));
}

TEST(ArchitectureTest, ParameterLayout) {
  EXPECT_EQ(Architecture::Linear(5, 3).ParameterCount(), 18u);
  EXPECT_EQ(Architecture::Mlp(5, 7, 3).ParameterCount(), 5u * 7 + 7 + 7 * 3 + 3);
  EXPECT_FALSE(Architecture::Mlp(5, 0, 3).Validate().ok());
  EXPECT_FALSE(Architecture::Linear(5, 1).Validate().ok());
}

TEST(HyperParamsTest, DpFieldsComeTogether) {
  HyperParams h;
  EXPECT_TRUE(h.Validate().ok());
  h.clip_norm = 1.0;
  EXPECT_EQ(h.Validate().code(), absl::StatusCode::kInvalidArgument);
  h.noise_multiplier = 0.0;
  EXPECT_TRUE(h.Validate().ok());
  h.learning_rate = 0;
  EXPECT_FALSE(h.Validate().ok());
}

TEST(TrainTest, StepsAndSamplingRate) {
  HyperParams h;
  h.batch_size = 32;
  h.epochs = 3;
  EXPECT_EQ(TrainingSteps(100, h), 3 * 4);
  EXPECT_DOUBLE_EQ(SamplingRate(100, h), 0.32);
  h.batch_size = 500;
  EXPECT_EQ(TrainingSteps(100, h), 3);
  EXPECT_DOUBLE_EQ(SamplingRate(100, h), 1.0);
}

TEST(TrainTest, DeterministicAndSeedSensitive) {
  const LabeledSet data = Toy(60);
  HyperParams h;
  h.learning_rate = 1e-2;
  h.batch_size = 16;
  h.epochs = 5;
  const Architecture arch = Architecture::Linear(5, 3);
  const Model a = *Train(arch, data, h, 9);
  const Model b = *Train(arch, data, h, 9);
  const Model c = *Train(arch, data, h, 10);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.train_hash, b.train_hash);
  EXPECT_NE(a.weights, c.weights);
  EXPECT_NE(a.train_hash, c.train_hash);
  EXPECT_EQ(a.train_hash, TrainHash(arch, data, h, 9));
}

TEST(TrainTest, ApproachesNearestMeanClassifier) {
  // Classes share an isotropic covariance and equal priors, so assigning each
  // point to the nearest true class mean is Bayes optimal.
  DataSpec spec;
  spec.dim = 5;
  spec.classes = 3;
  spec.class_separation = 3.0;
  spec.seed = 4;
  const LabeledSet train = *SamplePopulation(spec, 600, "train");
  const LabeledSet test = *SamplePopulation(spec, 2000, "test");
  const std::vector<double> means = ClassMeans(spec);
  int correct = 0;
  for (size_t i = 0; i < test.size(); ++i) {
    int best = 0;
    double best_d = INFINITY;
    for (int c = 0; c < 3; ++c) {
      double d = 0;
      for (int k = 0; k < 5; ++k) {
        d += std::pow(test.features(i)[k] - means[c * 5 + k], 2);
      }
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    correct += best == test.label(i);
  }
  const double bayes = correct / 2000.0;
  HyperParams h;
  h.learning_rate = 1e-2;
  h.batch_size = 32;
  h.epochs = 20;
  EXPECT_GE(Accuracy(*Train(Architecture::Linear(5, 3), train, h, 1), test), bayes - 0.03);
  EXPECT_GE(Accuracy(*Train(Architecture::Mlp(5, 8, 3), train, h, 1), test), bayes - 0.03);
}

TEST(TrainTest, DpWithoutNoiseOrClippingMatchesPlainAdam) {
  const LabeledSet data = Toy(50);
  HyperParams plain;
  plain.learning_rate = 5e-3;
  plain.batch_size = 10;
  plain.epochs = 3;
  HyperParams dp = plain;
  dp.clip_norm = 1e9;
  dp.noise_multiplier = 0.0;
  const Architecture arch = Architecture::Linear(5, 3);
  const Model a = *Train(arch, data, plain, 3);
  const Model b = *Train(arch, data, dp, 3);
  EXPECT_THAT(a.weights, Pointwise(DoubleNear(1e-9), b.weights));
}

TEST(TrainTest, NoiseChangesDpModels) {
  const LabeledSet data = Toy(50);
  HyperParams h;
  h.learning_rate = 5e-3;
  h.batch_size = 10;
  h.epochs = 2;
  h.clip_norm = 1.0;
  h.noise_multiplier = 0.0;
  const Architecture arch = Architecture::Linear(5, 3);
  const Model quiet = *Train(arch, data, h, 3);
  h.noise_multiplier = 2.0;
  const Model noisy = *Train(arch, data, h, 3);
  EXPECT_NE(quiet.weights, noisy.weights);
}

TEST(TrainTest, DivergenceIsAnError) {
  HyperParams h;
  h.learning_rate = 1e307;
  h.batch_size = 5;
  h.epochs = 3;
  const LabeledSet data = Toy(20);
  absl::StatusOr<Model> m = Train(Architecture::Linear(5, 3), data, h, 1);
  EXPECT_EQ(m.status().code(), absl::StatusCode::kInternal);
}

TEST(TrainTest, RejectsBadInput) {
  HyperParams h;
  EXPECT_EQ(Train(Architecture::Linear(5, 3), LabeledSet(5), h, 1).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(Train(Architecture::Linear(4, 3), Toy(10), h, 1).ok());
}

TEST(ScoresTest, TrueClassScoreIsLogitOfConfidence) {
  const LabeledSet data = Toy(20);
  const Model m = *Train(Architecture::Linear(5, 3), data, HyperParams{}, 2);
  const std::vector<double> scores = TrueClassScores(m, data);
  for (size_t i = 0; i < data.size(); ++i) {
    const std::vector<double> p = *PredictConfidence(m, data.features(i));
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    EXPECT_NEAR(scores[i], LogitScore(p[data.label(i)]), 1e-8);
  }
}

TEST(ScoresTest, LogitClamp) {
  EXPECT_NEAR(LogitScore(1.0), 27.631021, 1e-6);
  EXPECT_NEAR(LogitScore(0.0), -27.631021, 1e-6);
  EXPECT_NEAR(LogitScore(1e-15), -27.631021, 1e-6);
  EXPECT_NEAR(LogitScore(0.9), std::log(9.0), 1e-12);
}

TEST(SerializeTest, RoundTripAndCorruption) {
  const Model m = *Train(Architecture::Mlp(5, 4, 3), Toy(20), HyperParams{}, 2);
  const std::string bytes = SerializeModel(m);
  const Model back = *DeserializeModel(bytes);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.arch, m.arch);
  EXPECT_EQ(back.train_hash, m.train_hash);
  EXPECT_EQ(DeserializeModel(bytes.substr(0, bytes.size() - 1)).status().code(),
            absl::StatusCode::kDataLoss);
}

}  // namespace
}  // namespace miaudit

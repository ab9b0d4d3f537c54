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

#ifndef MIAUDIT_ACCOUNTANT_H_
#define MIAUDIT_ACCOUNTANT_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "miaudit/metrics.h"

namespace miaudit {

// Target privacy budget. Only the RDP accountant is implemented.
struct DpSpec {
  double epsilon = 8.0;
  double delta = 1e-5;

  absl::Status Validate() const;
  // A delta at or above 1/|D| permits leaking a whole record; callers print
  // this advisory but carry on.
  std::optional<std::string> DeltaAdvisory(int64_t dataset_size) const;
};

// RDP orders the accountant minimizes over: 1.25..10 in steps of 0.25, every
// integer up to 64, then a sparse tail to 512.
std::span<const double> RdpOrders();

// RDP of one step of the Poisson-subsampled Gaussian mechanism at `order`.
// sampling_rate == 1 reduces to order / (2 sigma^2).
double SubsampledGaussianRdp(double noise_multiplier, double sampling_rate,
                             double order);

// Composes `steps` steps and converts to (epsilon, delta) via
// min_a [steps * rdp_a + log(1/delta) / (a - 1)].
absl::StatusOr<double> AccountEpsilon(double noise_multiplier, int64_t steps,
                                      double sampling_rate, double delta);

// Smallest noise multiplier in [0.3, 100] whose epsilon lies in
// [target.epsilon * (1 - 1e-3), target.epsilon]. If even 0.3 already
// satisfies the budget, 0.3 is returned.
absl::StatusOr<double> CalibrateNoise(const DpSpec& target, int64_t steps,
                                      double sampling_rate);

inline constexpr double kCalibrationMinSigma = 0.3;
inline constexpr double kCalibrationMaxSigma = 100.0;
inline constexpr double kCalibrationTolerance = 1e-3;

// 40 log-spaced deltas in [1e-9, 0.5].
std::vector<double> DeltaGrid();

// (epsilon(delta), delta) over DeltaGrid, the input the DP TPR bound
// minimizes over.
absl::StatusOr<std::vector<PrivacyPoint>> PrivacyProfile(double noise_multiplier,
                                                         int64_t steps,
                                                         double sampling_rate);

}  // namespace miaudit

#endif  // MIAUDIT_ACCOUNTANT_H_

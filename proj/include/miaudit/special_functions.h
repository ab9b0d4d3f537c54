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

#ifndef MIAUDIT_SPECIAL_FUNCTIONS_H_
#define MIAUDIT_SPECIAL_FUNCTIONS_H_

#include "absl/status/statusor.h"

namespace miaudit {

// Regularized incomplete beta I_x(a, b), evaluated with the modified Lentz
// continued fraction. Relative error is ~1e-14 in the well-conditioned
// region. Fails with kInternal if the fraction does not converge.
absl::StatusOr<double> RegIncBeta(double a, double b, double x);

// Inverse of RegIncBeta in x: the q-quantile of Beta(a, b). Bracketed
// bisection on [0, 1] until the bracket is narrower than 1e-14.
absl::StatusOr<double> RegIncBetaInv(double a, double b, double q);

// CDF of Student's t distribution with `df` degrees of freedom.
absl::StatusOr<double> StudentTCdf(double t, double df);

}  // namespace miaudit

#endif  // MIAUDIT_SPECIAL_FUNCTIONS_H_

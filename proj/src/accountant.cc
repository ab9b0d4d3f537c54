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

#include "miaudit/accountant.h"

#include <cmath>
#include <limits>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "miaudit/status_macros.h"

namespace miaudit {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log(exp(a) - exp(b)); -inf when b >= a (the true value is tiny there and
// only appears in truncated series tails).
double LogSub(double a, double b) {
  if (b == kNegInf) return a;
  if (b >= a) return kNegInf;
  return a + std::log1p(-std::exp(b - a));
}

double LogErfc(double x) {
  if (x < 25.0) return std::log(std::erfc(x));
  // Asymptotic expansion; erfc underflows past ~26.
  const double x2 = x * x;
  return -x2 - std::log(x) - 0.5 * std::log(M_PI) +
         std::log1p(-0.5 / x2 + 0.75 / (x2 * x2));
}

std::vector<double> BuildOrders() {
  std::vector<double> orders;
  for (double a = 1.25; a <= 10.0 + 1e-12; a += 0.25) orders.push_back(a);
  for (int a = 11; a <= 64; ++a) orders.push_back(a);
  for (double a : {80.0, 96.0, 128.0, 256.0, 512.0}) orders.push_back(a);
  return orders;
}

// Integer order: log sum_k C(a,k) (1-q)^(a-k) q^k exp((k^2 - k) / (2 s^2)).
double LogAInteger(double q, double sigma, int order) {
  double log_a = kNegInf;
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  for (int k = 0; k <= order; ++k) {
    const double log_binom = std::lgamma(order + 1.0) - std::lgamma(k + 1.0) -
                             std::lgamma(order - k + 1.0);
    const double term = log_binom + k * log_q + (order - k) * log_1mq +
                        (static_cast<double>(k) * k - k) / (2.0 * sigma * sigma);
    log_a = LogAdd(log_a, term);
  }
  return log_a;
}

// Fractional order: the two-sided series of Mironov, Talwar and Zhang,
// truncated once both tails drop below e^-30.
double LogAFractional(double q, double sigma, double order) {
  double log_a0 = kNegInf;
  double log_a1 = kNegInf;
  const double z0 = sigma * sigma * std::log(1.0 / q - 1.0) + 0.5;
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  double log_coef = 0.0;  // log |C(order, i)|
  double sign = 1.0;
  for (int i = 0; i < 100000; ++i) {
    if (i > 0) {
      const double factor = (order - (i - 1)) / static_cast<double>(i);
      if (factor == 0.0) break;
      if (factor < 0.0) sign = -sign;
      log_coef += std::log(std::fabs(factor));
    }
    const double j = order - i;
    const double log_t0 = log_coef + i * log_q + j * log_1mq;
    const double log_t1 = log_coef + j * log_q + i * log_1mq;
    const double log_e0 =
        std::log(0.5) + LogErfc((i - z0) / (M_SQRT2 * sigma));
    const double log_e1 =
        std::log(0.5) + LogErfc((z0 - j) / (M_SQRT2 * sigma));
    const double log_s0 =
        log_t0 + (static_cast<double>(i) * i - i) / (2.0 * sigma * sigma) + log_e0;
    const double log_s1 = log_t1 + (j * j - j) / (2.0 * sigma * sigma) + log_e1;
    if (sign > 0) {
      log_a0 = LogAdd(log_a0, log_s0);
      log_a1 = LogAdd(log_a1, log_s1);
    } else {
      log_a0 = LogSub(log_a0, log_s0);
      log_a1 = LogSub(log_a1, log_s1);
    }
    if (std::max(log_s0, log_s1) < -30.0) break;
  }
  return LogAdd(log_a0, log_a1);
}

}  // namespace

absl::Status DpSpec::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("dp epsilon must be positive and finite, got ", epsilon));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("dp delta must lie in (0, 1), got ", delta));
  }
  return absl::OkStatus();
}

std::optional<std::string> DpSpec::DeltaAdvisory(int64_t dataset_size) const {
  if (dataset_size > 0 && delta * static_cast<double>(dataset_size) >= 1.0) {
    return absl::StrFormat(
        "delta=%g is not below 1/|D| = %g; the guarantee is weak", delta,
        1.0 / static_cast<double>(dataset_size));
  }
  return std::nullopt;
}

std::span<const double> RdpOrders() {
  static const std::vector<double>* const kOrders =
      new std::vector<double>(BuildOrders());
  return *kOrders;
}

double SubsampledGaussianRdp(double noise_multiplier, double sampling_rate,
                             double order) {
  const double sigma = noise_multiplier;
  if (sampling_rate >= 1.0) return order / (2.0 * sigma * sigma);
  const double rounded = std::round(order);
  const double log_a =
      rounded == order
          ? LogAInteger(sampling_rate, sigma, static_cast<int>(rounded))
          : LogAFractional(sampling_rate, sigma, order);
  return log_a / (order - 1.0);
}

namespace {

absl::Status CheckMechanism(double noise_multiplier, int64_t steps,
                            double sampling_rate) {
  if (!(noise_multiplier > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("noise_multiplier must be positive, got ", noise_multiplier));
  }
  if (steps < 1) {
    return absl::InvalidArgumentError(absl::StrCat("steps must be >= 1, got ", steps));
  }
  if (!(sampling_rate > 0.0 && sampling_rate <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sampling_rate must lie in (0, 1], got ", sampling_rate));
  }
  return absl::OkStatus();
}

// Composed RDP at every order.
std::vector<double> ComposedRdp(double noise_multiplier, int64_t steps,
                                double sampling_rate) {
  std::vector<double> rdp;
  for (double order : RdpOrders()) {
    rdp.push_back(static_cast<double>(steps) *
                  SubsampledGaussianRdp(noise_multiplier, sampling_rate, order));
  }
  return rdp;
}

absl::StatusOr<double> RdpToEpsilon(std::span<const double> rdp, double delta,
                                    double noise_multiplier, int64_t steps,
                                    double sampling_rate) {
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  const double log_inv_delta = -std::log(delta);
  const std::span<const double> orders = RdpOrders();
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < orders.size(); ++i) {
    const double eps = rdp[i] + log_inv_delta / (orders[i] - 1.0);
    if (std::isfinite(eps) && eps < best) best = eps;
  }
  if (!std::isfinite(best)) {
    return absl::InternalError(absl::StrFormat(
        "privacy accounting failed: no finite order for sigma=%g steps=%d q=%g",
        noise_multiplier, steps, sampling_rate));
  }
  return std::max(best, 0.0);
}

}  // namespace

absl::StatusOr<double> AccountEpsilon(double noise_multiplier, int64_t steps,
                                      double sampling_rate, double delta) {
  MIAUDIT_RETURN_IF_ERROR(CheckMechanism(noise_multiplier, steps, sampling_rate));
  return RdpToEpsilon(ComposedRdp(noise_multiplier, steps, sampling_rate), delta,
                      noise_multiplier, steps, sampling_rate);
}

absl::StatusOr<double> CalibrateNoise(const DpSpec& target, int64_t steps,
                                      double sampling_rate) {
  MIAUDIT_RETURN_IF_ERROR(target.Validate());
  auto eps_at = [&](double sigma) {
    return AccountEpsilon(sigma, steps, sampling_rate, target.delta);
  };
  MIAUDIT_ASSIGN_OR_RETURN(const double eps_lo, eps_at(kCalibrationMinSigma));
  if (eps_lo <= target.epsilon) return kCalibrationMinSigma;
  MIAUDIT_ASSIGN_OR_RETURN(const double eps_hi, eps_at(kCalibrationMaxSigma));
  if (eps_hi > target.epsilon) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "cannot reach epsilon=%g with noise_multiplier <= %g (got %g over %d "
        "steps at q=%g); allow more noise or train for fewer steps",
        target.epsilon, kCalibrationMaxSigma, eps_hi, steps, sampling_rate));
  }
  const double floor = target.epsilon * (1.0 - kCalibrationTolerance);
  double lo = kCalibrationMinSigma;
  double hi = kCalibrationMaxSigma;
  double hi_eps = eps_hi;
  for (int iter = 0; iter < 200 && hi - lo > 1e-12 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    MIAUDIT_ASSIGN_OR_RETURN(const double eps, eps_at(mid));
    if (eps <= target.epsilon) {
      hi = mid;
      hi_eps = eps;
    } else {
      lo = mid;
    }
  }
  if (hi_eps < floor) {
    return absl::InternalError(absl::StrFormat(
        "noise calibration stalled at sigma=%g with epsilon=%g below the "
        "tolerance band of %g",
        hi, hi_eps, target.epsilon));
  }
  return hi;
}

std::vector<double> DeltaGrid() {
  constexpr int kPoints = 40;
  const double lo = std::log(1e-9);
  const double hi = std::log(0.5);
  std::vector<double> deltas(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    deltas[i] = std::exp(lo + (hi - lo) * i / (kPoints - 1));
  }
  deltas.back() = 0.5;
  return deltas;
}

absl::StatusOr<std::vector<PrivacyPoint>> PrivacyProfile(double noise_multiplier,
                                                         int64_t steps,
                                                         double sampling_rate) {
  MIAUDIT_RETURN_IF_ERROR(CheckMechanism(noise_multiplier, steps, sampling_rate));
  const std::vector<double> rdp =
      ComposedRdp(noise_multiplier, steps, sampling_rate);
  std::vector<PrivacyPoint> profile;
  for (double delta : DeltaGrid()) {
    MIAUDIT_ASSIGN_OR_RETURN(const double eps,
                             RdpToEpsilon(rdp, delta, noise_multiplier, steps,
                                          sampling_rate));
    profile.push_back({eps, delta});
  }
  return profile;
}

}  // namespace miaudit

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

#include "miaudit/synthdata.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "miaudit/seeding.h"

namespace miaudit {
namespace {

constexpr int kRepulsionSteps = 400;
constexpr double kRepulsionStep = 0.05;

void Normalize(std::span<double> v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (double& x : v) x /= norm;
}

LabeledSet Draw(const DataSpec& spec, const std::vector<double>& means,
                int64_t n, uint64_t seed, uint64_t id_base) {
  Rng rng(seed);
  LabeledSet set(spec.dim);
  set.Reserve(static_cast<size_t>(n));
  std::vector<double> x(spec.dim);
  for (int64_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(UniformInt(rng, 0, spec.classes - 1));
    for (int d = 0; d < spec.dim; ++d) {
      x[d] = means[static_cast<size_t>(label) * spec.dim + d] +
             spec.noise_sigma * StandardNormal(rng);
    }
    set.Add(x, label, id_base + static_cast<uint64_t>(i));
  }
  return set;
}

}  // namespace

absl::Status DataSpec::Validate() const {
  if (dim < 1) {
    return absl::InvalidArgumentError(absl::StrCat("data.dim must be >= 1, got ", dim));
  }
  if (classes < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("data.classes must be >= 2, got ", classes));
  }
  if (!(class_separation > 0.0) || !std::isfinite(class_separation)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "data.class_separation must be positive, got ", class_separation));
  }
  if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
    return absl::InvalidArgumentError(
        absl::StrCat("data.noise_sigma must be positive, got ", noise_sigma));
  }
  return absl::OkStatus();
}

void LabeledSet::Add(std::span<const double> x, int label, uint64_t id) {
  features_.insert(features_.end(), x.begin(), x.end());
  labels_.push_back(label);
  ids_.push_back(id);
}

void LabeledSet::Reserve(size_t n) {
  features_.reserve(n * dim_);
  labels_.reserve(n);
  ids_.reserve(n);
}

LabeledSet LabeledSet::Subset(std::span<const size_t> indices) const {
  LabeledSet out(dim_);
  out.Reserve(indices.size());
  for (size_t i : indices) out.Add(features(i), labels_[i], ids_[i]);
  return out;
}

Digest LabeledSet::ContentDigest() const {
  ByteWriter w;
  w.String("labeled-set/v1");
  w.U32(static_cast<uint32_t>(dim_));
  w.U64(size());
  for (size_t i = 0; i < size(); ++i) {
    w.U64(ids_[i]);
    w.U32(static_cast<uint32_t>(labels_[i]));
  }
  w.F64s(features_);
  return w.Hash();
}

std::vector<double> ClassMeans(const DataSpec& spec) {
  const int k = spec.classes;
  const int dim = spec.dim;
  std::vector<double> means(static_cast<size_t>(k) * dim, 0.0);
  if (dim == 1) {
    // Only a line is available: evenly spaced, centred at zero.
    for (int c = 0; c < k; ++c) {
      means[c] = spec.class_separation * (c - 0.5 * (k - 1));
    }
    return means;
  }

  // Points on the unit sphere pushed apart by inverse-square repulsion. For
  // k <= dim + 1 this converges to the regular simplex.
  Rng rng(DeriveSeed(spec.seed, "class-means"));
  for (double& v : means) v = StandardNormal(rng);
  auto row = [&](int c) {
    return std::span<double>(means.data() + static_cast<size_t>(c) * dim, dim);
  };
  for (int c = 0; c < k; ++c) Normalize(row(c));

  std::vector<double> force(means.size());
  for (int step = 0; step < kRepulsionSteps; ++step) {
    std::fill(force.begin(), force.end(), 0.0);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        if (a == b) continue;
        double dist2 = 0.0;
        for (int d = 0; d < dim; ++d) {
          const double diff = means[a * dim + d] - means[b * dim + d];
          dist2 += diff * diff;
        }
        const double inv = 1.0 / std::max(dist2 * std::sqrt(dist2), 1e-12);
        for (int d = 0; d < dim; ++d) {
          force[a * dim + d] += (means[a * dim + d] - means[b * dim + d]) * inv;
        }
      }
    }
    for (size_t i = 0; i < means.size(); ++i) {
      means[i] += kRepulsionStep * force[i] / k;
    }
    for (int c = 0; c < k; ++c) Normalize(row(c));
  }

  double total = 0.0;
  int pairs = 0;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      double dist2 = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double diff = means[a * dim + d] - means[b * dim + d];
        dist2 += diff * diff;
      }
      total += std::sqrt(dist2);
      ++pairs;
    }
  }
  const double scale = spec.class_separation / (total / pairs);
  for (double& v : means) v *= scale;
  return means;
}

absl::StatusOr<LabeledSet> SamplePopulation(const DataSpec& spec, int64_t n,
                                            absl::string_view stream) {
  if (auto s = spec.Validate(); !s.ok()) return s;
  if (n < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("population request must be >= 1 sample, got ", n));
  }
  if (static_cast<uint64_t>(n) > kExternalIdBase) {
    return absl::InvalidArgumentError("population request exceeds pool id space");
  }
  return Draw(spec, ClassMeans(spec), n,
              DeriveSeed(spec.seed, absl::StrCat("pool/", stream)), 0);
}

absl::StatusOr<std::vector<LabeledSet>> SampleExternalDatasets(
    const DataSpec& spec, int count, std::span<const int64_t> sizes,
    const DataStream& stream) {
  if (auto s = spec.Validate(); !s.ok()) return s;
  if (stream.id_namespace != IdNamespace::kExternal) {
    return absl::InvalidArgumentError(absl::StrCat(
        "external stream '", stream.label, "' collides with the pool id namespace"));
  }
  if (count < 1 || count > kMaxExternalSets) {
    return absl::InvalidArgumentError(absl::StrCat(
        "external set count must be in [1, ", kMaxExternalSets, "], got ", count));
  }
  if (sizes.size() != 1 && sizes.size() != static_cast<size_t>(count)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "external sizes must have 1 or ", count, " entries, got ", sizes.size()));
  }
  const std::vector<double> means = ClassMeans(spec);
  std::vector<LabeledSet> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const int64_t n = sizes.size() == 1 ? sizes[0] : sizes[k];
    if (n < 1 || static_cast<uint64_t>(n) > kExternalSetStride) {
      return absl::InvalidArgumentError(
          absl::StrCat("external set ", k, " has invalid size ", n));
    }
    out.push_back(Draw(
        spec, means, n,
        DeriveSeed(spec.seed, absl::StrCat("external/", stream.label), k),
        kExternalIdBase + static_cast<uint64_t>(k) * kExternalSetStride));
  }
  return out;
}

MembershipMask::MembershipMask(int rows, std::vector<uint64_t> pool_ids)
    : rows_(rows),
      pool_ids_(std::move(pool_ids)),
      bits_(static_cast<size_t>(rows) * pool_ids_.size(), 0) {}

std::vector<size_t> MembershipMask::RowIndices(int row) const {
  std::vector<size_t> out;
  for (size_t s = 0; s < pool_size(); ++s) {
    if (member(row, s)) out.push_back(s);
  }
  return out;
}

int MembershipMask::InclusionCount(size_t sample) const {
  int count = 0;
  for (int r = 0; r < rows_; ++r) count += member(r, sample) ? 1 : 0;
  return count;
}

absl::StatusOr<MembershipMask> BuildGridDatasets(const LabeledSet& pool, int m,
                                                 uint64_t seed) {
  if (pool.empty()) {
    return absl::InvalidArgumentError("grid pool is empty");
  }
  if (m < 1) {
    return absl::InvalidArgumentError(absl::StrCat("grid M must be >= 1, got ", m));
  }
  MembershipMask mask(m + 1, std::vector<uint64_t>(pool.ids().begin(),
                                                   pool.ids().end()));
  Rng rng(DeriveSeed(seed, "grid-mask"));
  uint64_t bits = 0;
  int left = 0;
  for (int r = 0; r <= m; ++r) {
    for (size_t s = 0; s < pool.size(); ++s) {
      if (left == 0) {
        bits = rng();
        left = 64;
      }
      mask.set(r, s, bits & 1);
      bits >>= 1;
      --left;
    }
  }
  return mask;
}

}  // namespace miaudit

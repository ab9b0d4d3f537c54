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

#ifndef MIAUDIT_SYNTHDATA_H_
#define MIAUDIT_SYNTHDATA_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "miaudit/digest.h"

namespace miaudit {

// A seeded Gaussian-mixture classification population. Class means sit on a
// near-regular simplex whose mean pairwise distance is `class_separation`;
// each sample adds isotropic N(0, noise_sigma^2) noise to its class mean.
struct DataSpec {
  int dim = 8;
  int classes = 10;
  double class_separation = 6.0;
  double noise_sigma = 1.0;
  uint64_t seed = 0;

  absl::Status Validate() const;
};

// Sample ids are partitioned so that pool and external draws can never
// collide: pool ids live in [0, 2^48), external set k of a stream uses
// [2^48 + k * 2^40, 2^48 + (k + 1) * 2^40).
inline constexpr uint64_t kExternalIdBase = uint64_t{1} << 48;
inline constexpr uint64_t kExternalIdLimit = uint64_t{1} << 49;
inline constexpr uint64_t kExternalSetStride = uint64_t{1} << 40;
inline constexpr int kMaxExternalSets = 256;

class LabeledSet {
 public:
  LabeledSet() = default;
  explicit LabeledSet(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  std::span<const double> features(size_t i) const {
    return {features_.data() + i * dim_, static_cast<size_t>(dim_)};
  }
  int label(size_t i) const { return labels_[i]; }
  uint64_t id(size_t i) const { return ids_[i]; }
  std::span<const uint64_t> ids() const { return ids_; }
  std::span<const int> labels() const { return labels_; }

  void Add(std::span<const double> x, int label, uint64_t id);
  void Reserve(size_t n);

  // Rows at `indices`, in that order.
  LabeledSet Subset(std::span<const size_t> indices) const;

  // SHA-256 over (dim, ids, labels, features) in order.
  Digest ContentDigest() const;

 private:
  int dim_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
  std::vector<uint64_t> ids_;
};

// Class means as a classes x dim row-major matrix. Pure function of the spec.
std::vector<double> ClassMeans(const DataSpec& spec);

// n i.i.d. draws in the pool id namespace (ids 0..n-1). Distinct stream
// labels give independent draws from the same population.
absl::StatusOr<LabeledSet> SamplePopulation(const DataSpec& spec, int64_t n,
                                            absl::string_view stream);

enum class IdNamespace { kPool, kExternal };

struct DataStream {
  std::string label;
  IdNamespace id_namespace = IdNamespace::kExternal;
};

// `count` fresh sets whose ids are disjoint from every pool id. sizes has
// either one entry (shared) or `count` entries.
absl::StatusOr<std::vector<LabeledSet>> SampleExternalDatasets(
    const DataSpec& spec, int count, std::span<const int64_t> sizes,
    const DataStream& stream);

// Membership of each pool sample in each of the M + 1 grid datasets.
class MembershipMask {
 public:
  MembershipMask() = default;
  MembershipMask(int rows, std::vector<uint64_t> pool_ids);

  int rows() const { return rows_; }
  size_t pool_size() const { return pool_ids_.size(); }
  std::span<const uint64_t> pool_ids() const { return pool_ids_; }

  bool member(int row, size_t sample) const {
    return bits_[static_cast<size_t>(row) * pool_size() + sample] != 0;
  }
  void set(int row, size_t sample, bool in) {
    bits_[static_cast<size_t>(row) * pool_size() + sample] = in ? 1 : 0;
  }
  // Pool indices that are members of `row`, ascending.
  std::vector<size_t> RowIndices(int row) const;
  int InclusionCount(size_t sample) const;

 private:
  int rows_ = 0;
  std::vector<uint64_t> pool_ids_;
  std::vector<uint8_t> bits_;
};

// Each (row, sample) entry is an independent fair coin under `seed`.
absl::StatusOr<MembershipMask> BuildGridDatasets(const LabeledSet& pool, int m,
                                                 uint64_t seed);

// Pool size that gives each 0.5-inclusion grid dataset about `shots`
// examples per class.
inline int64_t FewShotPoolSize(int shots, int classes) {
  return int64_t{2} * shots * classes;
}

}  // namespace miaudit

#endif  // MIAUDIT_SYNTHDATA_H_

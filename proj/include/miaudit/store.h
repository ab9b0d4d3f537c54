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

#ifndef MIAUDIT_STORE_H_
#define MIAUDIT_STORE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "miaudit/digest.h"
#include "miaudit/model.h"

namespace miaudit {

enum class ObjectKind { kModel, kScores, kHpo };

// Directory name of a kind: models, scores, hpo.
absl::string_view ObjectKindDir(ObjectKind kind);

// Identity of one trained cell.
struct CellKey {
  Digest dataset{};
  Digest hypers{};
  Digest arch{};
  uint64_t seed = 0;

  Digest ContentDigest() const;
};

// Content-addressed object store. Objects are immutable: putting different
// bytes under an existing digest is a kDataLoss error, putting the same bytes
// again is a no-op. Implementations are thread-safe.
class ObjectStore {
 public:
  virtual ~ObjectStore() = default;

  virtual absl::StatusOr<std::optional<std::string>> Get(ObjectKind kind,
                                                         const Digest& key) = 0;
  virtual absl::Status Put(ObjectKind kind, const Digest& key,
                           absl::string_view bytes) = 0;
  virtual absl::StatusOr<std::vector<Digest>> List(ObjectKind kind) = 0;

  // Named JSON documents, overwritten in place.
  virtual absl::Status PutManifest(absl::string_view name,
                                   absl::string_view json) = 0;
  virtual absl::StatusOr<std::optional<std::string>> GetManifest(
      absl::string_view name) = 0;
  virtual absl::StatusOr<std::vector<std::string>> ListManifests() = 0;
};

// In-process store for tests and throwaway runs.
class MemoryStore : public ObjectStore {
 public:
  absl::StatusOr<std::optional<std::string>> Get(ObjectKind kind,
                                                 const Digest& key) override;
  absl::Status Put(ObjectKind kind, const Digest& key,
                   absl::string_view bytes) override;
  absl::StatusOr<std::vector<Digest>> List(ObjectKind kind) override;
  absl::Status PutManifest(absl::string_view name, absl::string_view json) override;
  absl::StatusOr<std::optional<std::string>> GetManifest(
      absl::string_view name) override;
  absl::StatusOr<std::vector<std::string>> ListManifests() override;

 private:
  std::mutex mu_;
  std::map<std::pair<ObjectKind, Digest>, std::string> objects_;
  std::map<std::string, std::string, std::less<>> manifests_;
};

// On-disk layout under `root`:
//   models/<hex>, scores/<hex>, hpo/<hex>   payload + SHA-256 of payload
//   manifests/<name>.json
// Writes go to a temporary file in the same directory and are renamed into
// place, so readers never observe partial objects.
class FileStore : public ObjectStore {
 public:
  static absl::StatusOr<std::unique_ptr<FileStore>> Open(
      const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }

  absl::StatusOr<std::optional<std::string>> Get(ObjectKind kind,
                                                 const Digest& key) override;
  absl::Status Put(ObjectKind kind, const Digest& key,
                   absl::string_view bytes) override;
  absl::StatusOr<std::vector<Digest>> List(ObjectKind kind) override;
  absl::Status PutManifest(absl::string_view name, absl::string_view json) override;
  absl::StatusOr<std::optional<std::string>> GetManifest(
      absl::string_view name) override;
  absl::StatusOr<std::vector<std::string>> ListManifests() override;

 private:
  explicit FileStore(std::filesystem::path root) : root_(std::move(root)) {}

  std::filesystem::path ObjectPath(ObjectKind kind, const Digest& key) const;

  std::filesystem::path root_;
  std::mutex mu_;
};

// Typed accessors.
absl::Status PutModel(ObjectStore& store, const Digest& key, const Model& model);
absl::StatusOr<std::optional<Model>> GetModel(ObjectStore& store,
                                              const Digest& key);
absl::Status PutScores(ObjectStore& store, const Digest& key,
                       std::span<const double> scores);
absl::StatusOr<std::optional<std::vector<double>>> GetScores(ObjectStore& store,
                                                             const Digest& key);

// Atomic whole-file write (temporary file + rename).
absl::Status WriteFileAtomic(const std::filesystem::path& path,
                             absl::string_view contents);
absl::StatusOr<std::string> ReadFile(const std::filesystem::path& path);

// Objects of every kind that no manifest mentions. A manifest references an
// object by containing its hex digest anywhere in its text.
struct UnreferencedObject {
  ObjectKind kind;
  Digest digest;
};
absl::StatusOr<std::vector<UnreferencedObject>> FindUnreferenced(
    ObjectStore& store);

}  // namespace miaudit

#endif  // MIAUDIT_STORE_H_

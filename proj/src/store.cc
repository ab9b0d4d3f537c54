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

#include "miaudit/store.h"

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "absl/strings/str_cat.h"
#include "miaudit/status_macros.h"

namespace miaudit {
namespace {

namespace fs = std::filesystem;

constexpr ObjectKind kAllKinds[] = {ObjectKind::kModel, ObjectKind::kScores,
                                    ObjectKind::kHpo};

absl::Status ValidateManifestName(absl::string_view name) {
  if (name.empty() || name.find_first_of("/\\") != absl::string_view::npos ||
      name.front() == '.') {
    return absl::InvalidArgumentError(
        absl::StrCat("invalid manifest name '", name, "'"));
  }
  return absl::OkStatus();
}

absl::Status Conflict(ObjectKind kind, const Digest& key) {
  return absl::DataLossError(absl::StrCat("conflicting content for ",
                                          ObjectKindDir(kind), "/", ToHex(key)));
}

}  // namespace

absl::string_view ObjectKindDir(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::kModel:
      return "models";
    case ObjectKind::kScores:
      return "scores";
    case ObjectKind::kHpo:
      return "hpo";
  }
  return "unknown";
}

Digest CellKey::ContentDigest() const {
  ByteWriter w;
  w.String("train/v1");
  w.Bytes(arch);
  w.Bytes(dataset);
  w.Bytes(hypers);
  w.U64(seed);
  return w.Hash();
}

// MemoryStore

absl::StatusOr<std::optional<std::string>> MemoryStore::Get(ObjectKind kind,
                                                            const Digest& key) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = objects_.find({kind, key});
  if (it == objects_.end()) return std::optional<std::string>();
  return std::optional<std::string>(it->second);
}

absl::Status MemoryStore::Put(ObjectKind kind, const Digest& key,
                              absl::string_view bytes) {
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = objects_.try_emplace({kind, key}, bytes);
  if (!inserted && it->second != bytes) return Conflict(kind, key);
  return absl::OkStatus();
}

absl::StatusOr<std::vector<Digest>> MemoryStore::List(ObjectKind kind) {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<Digest> out;
  for (const auto& [k, v] : objects_) {
    if (k.first == kind) out.push_back(k.second);
  }
  return out;
}

absl::Status MemoryStore::PutManifest(absl::string_view name,
                                      absl::string_view json) {
  MIAUDIT_RETURN_IF_ERROR(ValidateManifestName(name));
  std::lock_guard<std::mutex> lock(mu_);
  manifests_[std::string(name)] = std::string(json);
  return absl::OkStatus();
}

absl::StatusOr<std::optional<std::string>> MemoryStore::GetManifest(
    absl::string_view name) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = manifests_.find(name);
  if (it == manifests_.end()) return std::optional<std::string>();
  return std::optional<std::string>(it->second);
}

absl::StatusOr<std::vector<std::string>> MemoryStore::ListManifests() {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  for (const auto& [name, json] : manifests_) out.push_back(name);
  return out;
}

// File helpers

absl::Status WriteFileAtomic(const fs::path& path, absl::string_view contents) {
  static std::atomic<uint64_t> counter{0};
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) {
    return absl::UnavailableError(absl::StrCat(
        "cannot create directory ", path.parent_path().string(), ": ", ec.message()));
  }
  const fs::path tmp = path.parent_path() /
                       absl::StrCat(".", path.filename().string(), ".tmp.",
                                    ::getpid(), ".", counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      return absl::UnavailableError(absl::StrCat("write failed: ", tmp.string()));
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    return absl::UnavailableError(
        absl::StrCat("rename to ", path.string(), " failed: ", ec.message()));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::string> ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) return absl::UnavailableError(absl::StrCat("read failed: ", path.string()));
  return buffer.str();
}

// FileStore

absl::StatusOr<std::unique_ptr<FileStore>> FileStore::Open(const fs::path& root) {
  std::error_code ec;
  for (ObjectKind kind : kAllKinds) {
    fs::create_directories(root / std::string(ObjectKindDir(kind)), ec);
    if (ec) {
      return absl::UnavailableError(absl::StrCat(
          "cannot create store at ", root.string(), ": ", ec.message()));
    }
  }
  fs::create_directories(root / "manifests", ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create store at ", root.string(), ": ", ec.message()));
  }
  return std::unique_ptr<FileStore>(new FileStore(root));
}

fs::path FileStore::ObjectPath(ObjectKind kind, const Digest& key) const {
  return root_ / std::string(ObjectKindDir(kind)) / ToHex(key);
}

absl::StatusOr<std::optional<std::string>> FileStore::Get(ObjectKind kind,
                                                          const Digest& key) {
  const fs::path path = ObjectPath(kind, key);
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::optional<std::string>();
  MIAUDIT_ASSIGN_OR_RETURN(std::string raw, ReadFile(path));
  if (raw.size() < 32) {
    return absl::DataLossError(absl::StrCat("truncated object ", path.string()));
  }
  const absl::string_view payload(raw.data(), raw.size() - 32);
  const Digest checksum = Sha256(payload);
  if (absl::string_view(reinterpret_cast<const char*>(checksum.data()), 32) !=
      absl::string_view(raw).substr(raw.size() - 32)) {
    return absl::DataLossError(
        absl::StrCat("checksum mismatch in ", path.string()));
  }
  raw.resize(raw.size() - 32);
  return std::optional<std::string>(std::move(raw));
}

absl::Status FileStore::Put(ObjectKind kind, const Digest& key,
                            absl::string_view bytes) {
  std::lock_guard<std::mutex> lock(mu_);
  MIAUDIT_ASSIGN_OR_RETURN(std::optional<std::string> existing, Get(kind, key));
  if (existing) {
    if (*existing != bytes) return Conflict(kind, key);
    return absl::OkStatus();
  }
  std::string record(bytes);
  const Digest checksum = Sha256(bytes);
  record.append(reinterpret_cast<const char*>(checksum.data()), checksum.size());
  return WriteFileAtomic(ObjectPath(kind, key), record);
}

absl::StatusOr<std::vector<Digest>> FileStore::List(ObjectKind kind) {
  std::vector<Digest> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root_ / std::string(ObjectKindDir(kind)), ec)) {
    const std::string name = entry.path().filename().string();
    absl::StatusOr<Digest> digest = DigestFromHex(name);
    if (digest.ok()) out.push_back(*digest);
  }
  if (ec) return absl::UnavailableError(ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

absl::Status FileStore::PutManifest(absl::string_view name, absl::string_view json) {
  MIAUDIT_RETURN_IF_ERROR(ValidateManifestName(name));
  return WriteFileAtomic(root_ / "manifests" / absl::StrCat(name, ".json"), json);
}

absl::StatusOr<std::optional<std::string>> FileStore::GetManifest(
    absl::string_view name) {
  MIAUDIT_RETURN_IF_ERROR(ValidateManifestName(name));
  const fs::path path = root_ / "manifests" / absl::StrCat(name, ".json");
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::optional<std::string>();
  MIAUDIT_ASSIGN_OR_RETURN(std::string json, ReadFile(path));
  return std::optional<std::string>(std::move(json));
}

absl::StatusOr<std::vector<std::string>> FileStore::ListManifests() {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root_ / "manifests", ec)) {
    if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  if (ec) return absl::UnavailableError(ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

// Typed accessors

absl::Status PutModel(ObjectStore& store, const Digest& key, const Model& model) {
  return store.Put(ObjectKind::kModel, key, SerializeModel(model));
}

absl::StatusOr<std::optional<Model>> GetModel(ObjectStore& store, const Digest& key) {
  MIAUDIT_ASSIGN_OR_RETURN(std::optional<std::string> bytes,
                           store.Get(ObjectKind::kModel, key));
  if (!bytes) return std::optional<Model>();
  MIAUDIT_ASSIGN_OR_RETURN(Model model, DeserializeModel(*bytes));
  return std::optional<Model>(std::move(model));
}

absl::Status PutScores(ObjectStore& store, const Digest& key,
                       std::span<const double> scores) {
  ByteWriter w;
  w.U64(scores.size());
  w.F64s(scores);
  return store.Put(ObjectKind::kScores, key, w.data());
}

absl::StatusOr<std::optional<std::vector<double>>> GetScores(ObjectStore& store,
                                                             const Digest& key) {
  MIAUDIT_ASSIGN_OR_RETURN(std::optional<std::string> bytes,
                           store.Get(ObjectKind::kScores, key));
  if (!bytes) return std::optional<std::vector<double>>();
  ByteReader r(*bytes);
  MIAUDIT_ASSIGN_OR_RETURN(const uint64_t n, r.U64());
  if (r.remaining() != n * 8) {
    return absl::DataLossError("score record length mismatch");
  }
  std::vector<double> scores(n);
  for (double& v : scores) {
    MIAUDIT_ASSIGN_OR_RETURN(v, r.F64());
  }
  return std::optional<std::vector<double>>(std::move(scores));
}

absl::StatusOr<std::vector<UnreferencedObject>> FindUnreferenced(
    ObjectStore& store) {
  std::set<std::string> referenced;
  MIAUDIT_ASSIGN_OR_RETURN(std::vector<std::string> names, store.ListManifests());
  std::string corpus;
  for (const std::string& name : names) {
    MIAUDIT_ASSIGN_OR_RETURN(std::optional<std::string> json, store.GetManifest(name));
    if (json) absl::StrAppend(&corpus, *json, "\n");
  }
  std::vector<UnreferencedObject> out;
  for (ObjectKind kind : kAllKinds) {
    MIAUDIT_ASSIGN_OR_RETURN(std::vector<Digest> digests, store.List(kind));
    for (const Digest& d : digests) {
      if (corpus.find(ToHex(d)) == std::string::npos) out.push_back({kind, d});
    }
  }
  return out;
}

}  // namespace miaudit

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

#include <filesystem>
#include <fstream>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace miaudit {
namespace {

namespace fs = std::filesystem;
using ::testing::UnorderedElementsAre;

class StoreTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::path(::testing::TempDir()) /
            ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(root_);
  }
  fs::path root_;
};

TEST_F(StoreTest, PutGetRoundTrip) {
  auto store = *FileStore::Open(root_);
  const Digest key = Sha256("k");
  EXPECT_FALSE(store->Get(ObjectKind::kModel, key)->has_value());
  ASSERT_TRUE(store->Put(ObjectKind::kModel, key, "payload").ok());
  EXPECT_EQ(**store->Get(ObjectKind::kModel, key), "payload");
  EXPECT_FALSE(store->Get(ObjectKind::kScores, key)->has_value());
  EXPECT_TRUE(store->Put(ObjectKind::kModel, key, "payload").ok());
  EXPECT_EQ(store->Put(ObjectKind::kModel, key, "other").code(),
            absl::StatusCode::kDataLoss);
  EXPECT_THAT(*store->List(ObjectKind::kModel), UnorderedElementsAre(key));
}

TEST_F(StoreTest, DetectsCorruption) {
  auto store = *FileStore::Open(root_);
  const Digest key = Sha256("k");
  ASSERT_TRUE(store->Put(ObjectKind::kScores, key, "0123456789").ok());
  const fs::path path = root_ / "scores" / ToHex(key);
  ASSERT_TRUE(fs::exists(path));
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3);
    f.put('X');
  }
  EXPECT_EQ(store->Get(ObjectKind::kScores, key).status().code(),
            absl::StatusCode::kDataLoss);
  fs::resize_file(path, 5);
  EXPECT_EQ(store->Get(ObjectKind::kScores, key).status().code(),
            absl::StatusCode::kDataLoss);
}

TEST_F(StoreTest, ManifestsAndGc) {
  auto store = *FileStore::Open(root_);
  const Digest kept = Sha256("kept");
  const Digest dropped = Sha256("dropped");
  ASSERT_TRUE(store->Put(ObjectKind::kModel, kept, "a").ok());
  ASSERT_TRUE(store->Put(ObjectKind::kHpo, dropped, "b").ok());
  ASSERT_TRUE(store->PutManifest("run-1", "{\"objects\": [\"" + ToHex(kept) + "\"]}").ok());
  EXPECT_THAT(*store->ListManifests(), UnorderedElementsAre("run-1"));
  const auto garbage = *FindUnreferenced(*store);
  ASSERT_EQ(garbage.size(), 1u);
  EXPECT_EQ(garbage[0].kind, ObjectKind::kHpo);
  EXPECT_EQ(garbage[0].digest, dropped);
  ASSERT_TRUE(store->PutManifest("run-1", "{}").ok());
  EXPECT_EQ(FindUnreferenced(*store)->size(), 2u);
}

TEST_F(StoreTest, SurvivesReopen) {
  const Digest key = Sha256("persist");
  {
    auto store = *FileStore::Open(root_);
    ASSERT_TRUE(store->Put(ObjectKind::kHpo, key, "x").ok());
  }
  auto store = *FileStore::Open(root_);
  EXPECT_EQ(**store->Get(ObjectKind::kHpo, key), "x");
}

TEST(MemoryStoreTest, TypedAccessors) {
  MemoryStore store;
  const std::vector<double> scores = {1.5, -2.25, 1e300};
  ASSERT_TRUE(PutScores(store, Sha256("s"), scores).ok());
  EXPECT_EQ(**GetScores(store, Sha256("s")), scores);
  EXPECT_FALSE(GetScores(store, Sha256("missing"))->has_value());
  Model m;
  m.arch = Architecture::Linear(2, 2);
  m.weights = {1, 2, 3, 4, 5, 6};
  m.train_hash = Sha256("t");
  ASSERT_TRUE(PutModel(store, m.train_hash, m).ok());
  const Model back = **GetModel(store, m.train_hash);
  EXPECT_EQ(back.weights, m.weights);
  ASSERT_TRUE(store.Put(ObjectKind::kScores, Sha256("bad"), "xyz").ok());
  EXPECT_EQ(GetScores(store, Sha256("bad")).status().code(), absl::StatusCode::kDataLoss);
}

TEST(CellKeyTest, MatchesTrainHash) {
  DataSpec spec;
  spec.dim = 3;
  spec.classes = 2;
  const LabeledSet data = *SamplePopulation(spec, 10, "cell");
  const Architecture arch = Architecture::Linear(3, 2);
  HyperParams h;
  const CellKey key{data.ContentDigest(), h.ContentDigest(), arch.ContentDigest(), 77};
  EXPECT_EQ(key.ContentDigest(), TrainHash(arch, data, h, 77));
}

TEST(WriteFileAtomicTest, CreatesParentsAndReplaces) {
  const fs::path p = fs::path(::testing::TempDir()) / "atomic" / "nested" / "f.txt";
  fs::remove_all(p.parent_path().parent_path());
  ASSERT_TRUE(WriteFileAtomic(p, "one").ok());
  ASSERT_TRUE(WriteFileAtomic(p, "two").ok());
  EXPECT_EQ(*ReadFile(p), "two");
  EXPECT_FALSE(ReadFile(p.parent_path() / "missing").ok());
}

}  // namespace
}  // namespace miaudit

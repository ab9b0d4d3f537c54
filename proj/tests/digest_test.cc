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

#include "miaudit/digest.h"

#include <set>

#include "gtest/gtest.h"
#include "miaudit/seeding.h"

namespace miaudit {
namespace {

TEST(Sha256Test, KnownVectors) {
  EXPECT_EQ(ToHex(Sha256("")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(ToHex(Sha256("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(DigestTest, HexRoundTrip) {
  const Digest d = Sha256("round trip");
  EXPECT_EQ(*DigestFromHex(ToHex(d)), d);
  EXPECT_FALSE(DigestFromHex("abc").ok());
  EXPECT_FALSE(DigestFromHex(std::string(64, 'g')).ok());
}

TEST(ByteCodecTest, RoundTrip) {
  ByteWriter w;
  w.U8(7);
  w.U32(0xdeadbeef);
  w.U64(uint64_t{1} << 60);
  w.F64(-0.125);
  w.Bytes(Sha256("x"));
  const std::string bytes = w.Release();
  ByteReader r(bytes);
  EXPECT_EQ(*r.U8(), 7);
  EXPECT_EQ(*r.U32(), 0xdeadbeefu);
  EXPECT_EQ(*r.U64(), uint64_t{1} << 60);
  EXPECT_EQ(*r.F64(), -0.125);
  EXPECT_EQ(*r.ReadDigest(), Sha256("x"));
  EXPECT_EQ(r.remaining(), 0u);
  EXPECT_EQ(r.U8().status().code(), absl::StatusCode::kDataLoss);
}

TEST(ByteWriterTest, StringsAreLengthPrefixed) {
  ByteWriter a;
  a.String("ab");
  a.String("c");
  ByteWriter b;
  b.String("a");
  b.String("bc");
  EXPECT_NE(a.Hash(), b.Hash());
}

TEST(DeriveSeedTest, DeterministicAndPurposeSensitive) {
  EXPECT_EQ(DeriveSeed(1, "train"), DeriveSeed(1, "train"));
  std::set<uint64_t> seen;
  for (uint64_t s = 0; s < 50; ++s) {
    seen.insert(DeriveSeed(s, "a"));
    seen.insert(DeriveSeed(s, "b"));
    for (uint64_t i = 0; i < 20; ++i) seen.insert(DeriveSeed(s, "a", i));
  }
  EXPECT_EQ(seen.size(), 50u * 22);
}

TEST(SeedingTest, UniformIntStaysInRange) {
  Rng rng(5);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 4000; ++i) {
    const int64_t v = UniformInt(rng, 3, 6);
    ASSERT_GE(v, 3);
    ASSERT_LE(v, 6);
    ++counts[v - 3];
  }
  for (int c : counts) EXPECT_NEAR(c, 1000, 150);
}

}  // namespace
}  // namespace miaudit

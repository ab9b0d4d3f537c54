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

#ifndef MIAUDIT_DIGEST_H_
#define MIAUDIT_DIGEST_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace miaudit {

// SHA-256 output. Used for cache keys, train hashes and file checksums.
using Digest = std::array<uint8_t, 32>;

Digest Sha256(absl::string_view bytes);
std::string ToHex(const Digest& digest);
absl::StatusOr<Digest> DigestFromHex(absl::string_view hex);

// Canonical little-endian serializer. Everything that is hashed or written to
// disk goes through this so digests do not depend on host byte order.
class ByteWriter {
 public:
  void U8(uint8_t v) { buffer_.push_back(static_cast<char>(v)); }
  void U32(uint32_t v);
  void U64(uint64_t v);
  void I64(int64_t v) { U64(static_cast<uint64_t>(v)); }
  void F64(double v);
  void F64s(std::span<const double> values);
  void Bytes(absl::string_view bytes) { buffer_.append(bytes.data(), bytes.size()); }
  void Bytes(const Digest& digest);
  // Length-prefixed.
  void String(absl::string_view s);

  const std::string& data() const { return buffer_; }
  std::string Release() { return std::move(buffer_); }
  Digest Hash() const { return Sha256(buffer_); }

 private:
  std::string buffer_;
};

class ByteReader {
 public:
  explicit ByteReader(absl::string_view bytes) : bytes_(bytes) {}

  absl::StatusOr<uint8_t> U8();
  absl::StatusOr<uint32_t> U32();
  absl::StatusOr<uint64_t> U64();
  absl::StatusOr<double> F64();
  absl::StatusOr<Digest> ReadDigest();

  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  absl::Status Need(size_t n) const;

  absl::string_view bytes_;
  size_t pos_ = 0;
};

}  // namespace miaudit

#endif  // MIAUDIT_DIGEST_H_

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

#include <openssl/evp.h>

#include <bit>
#include <cstring>

#include "absl/strings/str_cat.h"

namespace miaudit {

Digest Sha256(absl::string_view bytes) {
  Digest out{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(),
             nullptr);
  return out;
}

std::string ToHex(const Digest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * digest.size());
  for (uint8_t b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

absl::StatusOr<Digest> DigestFromHex(absl::string_view hex) {
  if (hex.size() != 64) {
    return absl::InvalidArgumentError(
        absl::StrCat("digest must be 64 hex characters, got ", hex.size()));
  }
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Digest out{};
  for (size_t i = 0; i < out.size(); ++i) {
    const int hi = nibble(hex[2 * i]);
    const int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      return absl::InvalidArgumentError(absl::StrCat("bad hex digest: ", hex));
    }
    out[i] = static_cast<uint8_t>(hi << 4 | lo);
  }
  return out;
}

void ByteWriter::U32(uint32_t v) {
  for (int i = 0; i < 4; ++i) U8(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::U64(uint64_t v) {
  for (int i = 0; i < 8; ++i) U8(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::F64(double v) { U64(std::bit_cast<uint64_t>(v)); }

void ByteWriter::F64s(std::span<const double> values) {
  for (double v : values) F64(v);
}

void ByteWriter::Bytes(const Digest& digest) {
  buffer_.append(reinterpret_cast<const char*>(digest.data()), digest.size());
}

void ByteWriter::String(absl::string_view s) {
  U64(s.size());
  buffer_.append(s.data(), s.size());
}

absl::Status ByteReader::Need(size_t n) const {
  if (remaining() < n) {
    return absl::DataLossError(absl::StrCat("truncated record: need ", n,
                                            " bytes, have ", remaining()));
  }
  return absl::OkStatus();
}

absl::StatusOr<uint8_t> ByteReader::U8() {
  if (auto s = Need(1); !s.ok()) return s;
  return static_cast<uint8_t>(bytes_[pos_++]);
}

absl::StatusOr<uint32_t> ByteReader::U32() {
  if (auto s = Need(4); !s.ok()) return s;
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes_[pos_++])) << (8 * i);
  }
  return v;
}

absl::StatusOr<uint64_t> ByteReader::U64() {
  if (auto s = Need(8); !s.ok()) return s;
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<uint64_t>(static_cast<uint8_t>(bytes_[pos_++])) << (8 * i);
  }
  return v;
}

absl::StatusOr<double> ByteReader::F64() {
  auto bits = U64();
  if (!bits.ok()) return bits.status();
  return std::bit_cast<double>(*bits);
}

absl::StatusOr<Digest> ByteReader::ReadDigest() {
  if (auto s = Need(32); !s.ok()) return s;
  Digest d{};
  std::memcpy(d.data(), bytes_.data() + pos_, d.size());
  pos_ += d.size();
  return d;
}

}  // namespace miaudit

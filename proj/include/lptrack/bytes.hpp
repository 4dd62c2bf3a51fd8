// Copyright 2026 The lptrack Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "lptrack/error.hpp"

namespace lptrack {

// CRC-32C (Castagnoli), reflected, init and xorout 0xFFFFFFFF.
std::uint32_t crc32c(std::span<const std::uint8_t> data);

// Little-endian byte sink.
class ByteWriter {
 public:
  void put_bytes(const void* data, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), b, b + n);
  }
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    put_bytes(raw, sizeof(T));
  }
  void put_crc() { put<std::uint32_t>(crc32c(buf_)); }

  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Little-endian byte source; every read past the end throws FormatError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  void get_bytes(void* out, std::size_t n) {
    if (n > data_.size() - pos_) throw FormatError("truncated input");
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T get() {
    std::uint8_t raw[sizeof(T)];
    get_bytes(raw, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

// Validates the 4-byte CRC-32C trailer of a whole buffer and returns the
// payload in front of it.
inline std::span<const std::uint8_t> checked_payload(std::span<const std::uint8_t> data) {
  if (data.size() < 4) throw FormatError("truncated input: no checksum");
  auto payload = data.first(data.size() - 4);
  ByteReader trailer(data.last(4));
  if (trailer.get<std::uint32_t>() != crc32c(payload)) throw FormatError("checksum mismatch");
  return payload;
}

}  // namespace lptrack

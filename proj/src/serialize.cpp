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

// Checkpoint format, all fields little-endian:
//
//   "LPSK" | u16 version |
//   f64 p | f64 eps | f64 delta | u64 n | u64 m | u64 d | u64 r | u64 s |
//   f64 gamma | u32 tau | u8 mode |
//   32-byte master seed | d x i64 counters | u64 t | u32 CRC-32C

#include <algorithm>
#include <limits>

#include "lptrack/bytes.hpp"
#include "lptrack/error.hpp"
#include "lptrack/sketch.hpp"

namespace lptrack {
namespace {

constexpr char kMagic[4] = {'L', 'P', 'S', 'K'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

std::vector<std::uint8_t> PStableSketch::serialize() const {
  ByteWriter out;
  out.put_bytes(kMagic, 4);
  out.put<std::uint16_t>(kVersion);
  out.put<double>(config_.p);
  out.put<double>(config_.eps);
  out.put<double>(config_.delta);
  out.put<std::uint64_t>(config_.n);
  out.put<std::uint64_t>(config_.m);
  out.put<std::uint64_t>(config_.d);
  out.put<std::uint64_t>(config_.r);
  out.put<std::uint64_t>(config_.s);
  out.put<double>(config_.gamma);
  out.put<std::uint32_t>(config_.tau);
  out.put<std::uint8_t>(static_cast<std::uint8_t>(config_.mode));
  out.put_bytes(seed().data(), seed().size());
  for (std::int64_t c : counters_) out.put<std::int64_t>(c);
  out.put<std::uint64_t>(t_);
  out.put_crc();
  return out.take();
}

PStableSketch PStableSketch::deserialize(std::span<const std::uint8_t> bytes, EntryCache cache) {
  ByteReader in(checked_payload(bytes));
  char magic[4];
  in.get_bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("not a sketch checkpoint");
  if (const auto v = in.get<std::uint16_t>(); v != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(v));
  }
  SketchConfig c;
  c.p = in.get<double>();
  c.eps = in.get<double>();
  c.delta = in.get<double>();
  c.n = in.get<std::uint64_t>();
  c.m = in.get<std::uint64_t>();
  c.d = in.get<std::uint64_t>();
  const auto r = in.get<std::uint64_t>();
  const auto s = in.get<std::uint64_t>();
  if (r > std::numeric_limits<std::uint32_t>::max() || s > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("checkpoint independence parameters out of range");
  }
  c.r = static_cast<std::uint32_t>(r);
  c.s = static_cast<std::uint32_t>(s);
  c.gamma = in.get<double>();
  c.tau = in.get<std::uint32_t>();
  const auto mode = in.get<std::uint8_t>();
  if (mode > 1) throw FormatError("checkpoint has an unknown mode");
  c.mode = static_cast<TrackingMode>(mode);
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw FormatError(std::string("checkpoint config invalid: ") + e.what());
  }
  MasterSeed seed;
  in.get_bytes(seed.data(), seed.size());
  if (c.d > in.remaining() || in.remaining() != c.d * 8 + 8) throw FormatError("checkpoint size does not match d");

  PStableSketch sketch(c, seed, cache);
  for (auto& counter : sketch.counters_) counter = in.get<std::int64_t>();
  sketch.t_ = in.get<std::uint64_t>();
  if (sketch.t_ > c.m) throw FormatError("checkpoint t exceeds m");
  return sketch;
}

}  // namespace lptrack

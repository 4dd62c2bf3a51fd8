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

// Indyk's p-stable sketch over an insertion-only stream.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lptrack/prf.hpp"

namespace lptrack {

enum class TrackingMode : std::uint8_t { kWeak = 0, kStrong = 1 };

std::string to_string(TrackingMode mode);
TrackingMode parse_mode(std::string_view text);

// Multipliers in d = c_d eps^-2 L, r = c_r L, s = c_s eps^-p, with
// L = ln(1/eps) + ln(1/delta').
struct PlannerConstants {
  double c_d = 16.0;
  double c_r = 4.0;
  double c_s = 8.0;
};

struct SketchConfig {
  double p = 1.0;
  double eps = 0.25;
  double delta = 0.1;
  std::uint64_t n = 1;
  std::uint64_t m = 1;
  TrackingMode mode = TrackingMode::kWeak;
  std::uint64_t d = 1;
  std::uint32_t r = 2;
  std::uint32_t s = 2;
  double gamma = 0.0;
  std::uint32_t tau = 16;
  // Absent for configs read back from a checkpoint.
  std::optional<PlannerConstants> constants;

  // delta for weak mode, delta / (2 log2 m + 1) for strong mode.
  double effective_delta() const;
  std::uint64_t field_prime() const { return sketch_field_prime(n, tau); }
  // Per-entry magnitude cap, chosen so that m updates cannot overflow an i64.
  std::int64_t max_quanta() const;
  HierarchyShape hierarchy_shape() const;

  // Throws DomainError when an invariant does not hold.
  void validate() const;
};

// Equality of everything that determines the sketch matrix and counters.
bool same_layout(const SketchConfig& a, const SketchConfig& b);

// Throws DomainError for p outside (0, 2], eps outside (0, 1/2), delta outside
// (0, 1), n or m of zero, or parameters that need more than 61 bits per variate.
SketchConfig plan_config(double p, double eps, double delta, std::uint64_t n, std::uint64_t m, TrackingMode mode,
                         const PlannerConstants& constants = {});

// Bit accounting of the stored state.
struct SpaceAccount {
  std::uint64_t counter_bits = 0;  // d * 64
  std::uint64_t seed_bits = 0;     // r * s * ceil(log2 P)

  friend bool operator==(const SpaceAccount&, const SpaceAccount&) = default;
};

SpaceAccount space_formula(const SketchConfig& config);

// kRowSeeds keeps the d row seeds (d * s field elements); kItems additionally
// memoizes the d entries of every item seen. Neither changes any value.
enum class EntryCache : std::uint8_t { kNone, kRowSeeds, kItems };

class PStableSketch {
 public:
  PStableSketch(SketchConfig config, const MasterSeed& seed, EntryCache cache = EntryCache::kNone);

  const SketchConfig& config() const { return config_; }
  const MasterSeed& seed() const { return entries_.seeds().master_seed(); }
  const EntryGenerator& entries() const { return entries_; }
  std::uint64_t t() const { return t_; }
  std::span<const std::int64_t> counters() const { return counters_; }

  // counters[i] += w * entry(i, a). Throws DomainError for a >= n or w == 0,
  // StreamLengthError if t + w > m, OverflowError if a counter would leave
  // the i64 range. A throwing update leaves the sketch unchanged.
  void update(std::uint64_t a, std::uint64_t w = 1);

  // gamma * lower median of |counters| (order statistic ceil(d/2)).
  double estimate() const;
  std::uint64_t median_quanta() const;

  // Rows with gamma * |counter| < below and rows with gamma * |counter| <= at_most.
  struct RankCounts {
    std::uint64_t below = 0;
    std::uint64_t at_most = 0;
  };
  RankCounts rank_counts(double below, double at_most) const;

  // Adds other's counters. Throws MismatchError on differing config or seed,
  // StreamLengthError if the combined mass exceeds m.
  void merge_from(const PStableSketch& other);

  SpaceAccount space() const;

  std::vector<std::uint8_t> serialize() const;
  static PStableSketch deserialize(std::span<const std::uint8_t> bytes, EntryCache cache = EntryCache::kNone);

 private:
  void fill_entries(std::uint64_t a, std::vector<std::int64_t>& out) const;

  SketchConfig config_;
  EntryGenerator entries_;
  EntryCache cache_;
  std::vector<std::int64_t> counters_;
  std::uint64_t t_ = 0;
  std::vector<std::uint64_t> row_seeds_;  // d * s, when cached
  std::unordered_map<std::uint64_t, std::vector<std::int64_t>> item_entries_;
  std::vector<std::int64_t> scratch_;
  std::vector<std::int64_t> pending_;
};

PStableSketch merge(const PStableSketch& a, const PStableSketch& b);

}  // namespace lptrack

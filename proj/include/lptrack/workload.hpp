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

// Synthetic insertion-only streams for the harness and the CLI generator.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lptrack/oracle.hpp"
#include "lptrack/prf.hpp"

namespace lptrack {

enum class WorkloadKind : std::uint8_t { kUniform, kZipf, kSingleItem, kLateBurst };

std::string to_string(WorkloadKind kind);
// Accepts uniform, zipf, single_item, late_burst. Throws DomainError naming
// anything else.
WorkloadKind parse_workload(std::string_view name);

inline constexpr double kZipfExponent = 1.1;

// Every workload has total mass exactly m over items in [0, n).
//
// uniform: m unit updates, items uniform.
// zipf: m unit updates, rank k drawn with weight k^-1.1 and mapped to an item
//   through a seeded permutation.
// single_item: m unit updates of one seeded item.
// late_burst: m - m/2 zipf unit updates, then one seeded item gets the other
//   m/2 in weighted updates that make up the last ~1% of all updates.
Stream make_workload(WorkloadKind kind, std::uint64_t n, std::uint64_t m, const MasterSeed& seed);

// Inverse-CDF sampler over ranks 1..n with weight k^-exponent.
class ZipfSampler {
 public:
  ZipfSampler(std::uint64_t n, double exponent);
  // Rank in [0, n) for a uniform u in (0, 1).
  std::uint64_t rank(double u) const;

 private:
  std::vector<double> cdf_;
};

// Seeded Fisher-Yates permutation of [0, n).
std::vector<std::uint64_t> seeded_permutation(std::uint64_t n, SeedStream& stream);

}  // namespace lptrack

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

#include "lptrack/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lptrack/error.hpp"

namespace lptrack {
namespace {

constexpr std::uint64_t kWorkloadTag = 0x776f726b6c6f6164ULL;  // "workload"

// Burst updates per background update: 1 in 100 of all updates.
constexpr double kBurstShare = 99.0;

}  // namespace

std::string to_string(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::kUniform: return "uniform";
    case WorkloadKind::kZipf: return "zipf";
    case WorkloadKind::kSingleItem: return "single_item";
    case WorkloadKind::kLateBurst: return "late_burst";
  }
  return "unknown";
}

WorkloadKind parse_workload(std::string_view name) {
  if (name == "uniform") return WorkloadKind::kUniform;
  if (name == "zipf") return WorkloadKind::kZipf;
  if (name == "single_item") return WorkloadKind::kSingleItem;
  if (name == "late_burst") return WorkloadKind::kLateBurst;
  throw DomainError("unknown workload '" + std::string(name) + "'");
}

ZipfSampler::ZipfSampler(std::uint64_t n, double exponent) : cdf_(n) {
  if (n < 1) throw DomainError("zipf needs n >= 1");
  double total = 0.0;
  for (std::uint64_t k = 0; k < n; ++k) {
    total += std::pow(static_cast<double>(k + 1), -exponent);
    cdf_[k] = total;
  }
  for (double& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

std::uint64_t ZipfSampler::rank(double u) const {
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
}

std::vector<std::uint64_t> seeded_permutation(std::uint64_t n, SeedStream& stream) {
  std::vector<std::uint64_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::uint64_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[stream.below(k)]);
  return perm;
}

Stream make_workload(WorkloadKind kind, std::uint64_t n, std::uint64_t m, const MasterSeed& seed) {
  if (n < 1) throw DomainError("workload needs n >= 1");
  SeedStream stream(seed, kWorkloadTag + static_cast<std::uint64_t>(kind));
  Stream out;
  switch (kind) {
    case WorkloadKind::kUniform:
      out.reserve(m);
      for (std::uint64_t t = 0; t < m; ++t) out.push_back({stream.below(n), 1});
      break;
    case WorkloadKind::kSingleItem: {
      const std::uint64_t item = stream.below(n);
      out.assign(m, Update{item, 1});
      break;
    }
    case WorkloadKind::kZipf:
    case WorkloadKind::kLateBurst: {
      const std::vector<std::uint64_t> perm = seeded_permutation(n, stream);
      const ZipfSampler zipf(n, kZipfExponent);
      const std::uint64_t burst = kind == WorkloadKind::kLateBurst ? m / 2 : 0;
      const std::uint64_t background = m - burst;
      out.reserve(background + 1);
      for (std::uint64_t t = 0; t < background; ++t) out.push_back({perm[zipf.rank(stream.unit())], 1});
      if (burst == 0) break;
      const std::uint64_t item = stream.below(n);
      const auto events = std::clamp<std::uint64_t>(
          static_cast<std::uint64_t>(std::llround(static_cast<double>(background) / kBurstShare)), 1, burst);
      const std::uint64_t base = burst / events;
      const std::uint64_t extra = burst % events;
      for (std::uint64_t e = 0; e < events; ++e) out.push_back({item, base + (e < extra ? 1 : 0)});
      break;
    }
  }
  return out;
}

}  // namespace lptrack

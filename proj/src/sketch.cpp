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

#include "lptrack/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lptrack/error.hpp"

namespace lptrack {
namespace {

// ceil() that does not round 128.00000000000003 up to 129.
std::uint64_t ceil_count(double x) {
  return static_cast<std::uint64_t>(std::ceil(x * (1.0 - 1e-12)));
}

}  // namespace

std::string to_string(TrackingMode mode) { return mode == TrackingMode::kStrong ? "strong" : "weak"; }

TrackingMode parse_mode(std::string_view text) {
  if (text == "weak") return TrackingMode::kWeak;
  if (text == "strong") return TrackingMode::kStrong;
  throw DomainError("mode must be weak or strong");
}

double SketchConfig::effective_delta() const {
  if (mode == TrackingMode::kWeak) return delta;
  return delta / (2.0 * std::log2(static_cast<double>(m)) + 1.0);
}

std::int64_t SketchConfig::max_quanta() const {
  return std::numeric_limits<std::int64_t>::max() / static_cast<std::int64_t>(std::max<std::uint64_t>(m, 1));
}

HierarchyShape SketchConfig::hierarchy_shape() const {
  return HierarchyShape{.rows = d, .row_wise = r, .column_wise = s, .tau = tau, .field_prime = field_prime()};
}

void SketchConfig::validate() const {
  if (!(p > 0.0 && p <= 2.0)) throw DomainError("p must lie in (0, 2]");
  if (!(eps > 0.0 && eps < 0.5)) throw DomainError("eps must lie in (0, 1/2)");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (n < 1 || m < 1) throw DomainError("n and m must be positive");
  if (m > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) throw DomainError("m too large");
  if (d < 1 || r < 2 || s < 2) throw DomainError("need d >= 1, r >= 2, s >= 2");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be positive");
  if (tau < 1 || tau > 61) throw DomainError("tau must lie in [1, 61]");
}

bool same_layout(const SketchConfig& a, const SketchConfig& b) {
  return a.p == b.p && a.eps == b.eps && a.delta == b.delta && a.n == b.n && a.m == b.m && a.mode == b.mode &&
         a.d == b.d && a.r == b.r && a.s == b.s && a.gamma == b.gamma && a.tau == b.tau;
}

SketchConfig plan_config(double p, double eps, double delta, std::uint64_t n, std::uint64_t m, TrackingMode mode,
                         const PlannerConstants& constants) {
  if (!(p > 0.0 && p <= 2.0)) throw DomainError("p must lie in (0, 2]");
  if (!(eps > 0.0 && eps < 0.5)) throw DomainError("eps must lie in (0, 1/2)");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (n < 1 || m < 1) throw DomainError("n and m must be positive");
  if (!(constants.c_d > 0 && constants.c_r > 0 && constants.c_s > 0)) throw DomainError("planner constants must be positive");

  SketchConfig c;
  c.p = p;
  c.eps = eps;
  c.delta = delta;
  c.n = n;
  c.m = m;
  c.mode = mode;
  c.constants = constants;
  const double log_term = std::log(1.0 / eps) + std::log(1.0 / c.effective_delta());
  c.d = std::max<std::uint64_t>(1, ceil_count(constants.c_d * log_term / (eps * eps)));
  c.r = static_cast<std::uint32_t>(std::max<std::uint64_t>(2, ceil_count(constants.c_r * log_term)));
  c.s = static_cast<std::uint32_t>(std::max<std::uint64_t>(2, ceil_count(constants.c_s * std::pow(eps, -p))));
  c.gamma = eps / (4.0 * static_cast<double>(m));
  const double cells = std::ceil(std::log2(static_cast<double>(m) / eps)) + 8.0;
  if (cells > 61.0) throw DomainError("m / eps too large: more than 61 bits per variate");
  c.tau = static_cast<std::uint32_t>(cells);
  c.validate();
  return c;
}

SpaceAccount space_formula(const SketchConfig& config) {
  const PrimeField field(config.field_prime());
  return SpaceAccount{.counter_bits = config.d * 64,
                      .seed_bits = std::uint64_t{config.r} * config.s * field.element_bits()};
}

PStableSketch::PStableSketch(SketchConfig config, const MasterSeed& seed, EntryCache cache)
    : config_((config.validate(), std::move(config))),
      entries_(SeedHierarchy(seed, config_.hierarchy_shape()), shared_law(config_.p), config_.n, config_.gamma,
               config_.max_quanta()),
      cache_(cache),
      counters_(config_.d, 0) {
  if (cache_ != EntryCache::kNone) {
    row_seeds_.reserve(config_.d * config_.s);
    for (std::uint64_t i = 0; i < config_.d; ++i) {
      const auto block = entries_.seeds().row_seed(i);
      row_seeds_.insert(row_seeds_.end(), block.begin(), block.end());
    }
  }
}

void PStableSketch::fill_entries(std::uint64_t a, std::vector<std::int64_t>& out) const {
  out.resize(config_.d);
  if (cache_ == EntryCache::kNone) {
    for (std::uint64_t i = 0; i < config_.d; ++i) out[i] = entries_.entry(i, a);
    return;
  }
  entries_.column_from_seeds(row_seeds_, a, out);
}

void PStableSketch::update(std::uint64_t a, std::uint64_t w) {
  if (a >= config_.n) throw DomainError("item " + std::to_string(a) + " outside [0, n)");
  if (w == 0) throw DomainError("update weight must be positive");
  if (w > config_.m - t_) throw StreamLengthError("stream exceeds the configured length m");

  const std::vector<std::int64_t>* column = &scratch_;
  if (cache_ == EntryCache::kItems) {
    auto it = item_entries_.find(a);
    if (it == item_entries_.end()) {
      std::vector<std::int64_t> fresh;
      fill_entries(a, fresh);
      it = item_entries_.emplace(a, std::move(fresh)).first;
    }
    column = &it->second;
  } else {
    fill_entries(a, scratch_);
  }

  const auto weight = static_cast<std::int64_t>(w);
  std::vector<std::int64_t>& next = pending_;
  next.resize(counters_.size());
  for (std::size_t i = 0; i < counters_.size(); ++i) {
    std::int64_t delta;
    if (__builtin_mul_overflow((*column)[i], weight, &delta) ||
        __builtin_add_overflow(counters_[i], delta, &next[i])) {
      throw OverflowError("sketch counter overflow: gamma/tau do not fit 64-bit counters");
    }
  }
  counters_.swap(next);
  t_ += w;
}

std::uint64_t PStableSketch::median_quanta() const {
  thread_local std::vector<std::uint64_t> mags;
  mags.resize(counters_.size());
  for (std::size_t i = 0; i < counters_.size(); ++i) {
    const std::int64_t c = counters_[i];
    mags[i] = c < 0 ? static_cast<std::uint64_t>(-(c + 1)) + 1 : static_cast<std::uint64_t>(c);
  }
  const std::size_t k = (mags.size() + 1) / 2 - 1;
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end());
  return mags[k];
}

double PStableSketch::estimate() const { return config_.gamma * static_cast<double>(median_quanta()); }

PStableSketch::RankCounts PStableSketch::rank_counts(double below, double at_most) const {
  RankCounts out;
  const double gamma = config_.gamma;
  for (std::int64_t c : counters_) {
    const double v = gamma * static_cast<double>(c < 0 ? -static_cast<double>(c) : static_cast<double>(c));
    out.below += v < below;
    out.at_most += v <= at_most;
  }
  return out;
}

void PStableSketch::merge_from(const PStableSketch& other) {
  if (!same_layout(config_, other.config_)) throw MismatchError("cannot merge sketches with different configs");
  if (seed() != other.seed()) {
    throw MismatchError("cannot merge sketches with different seeds: " + seed_to_hex(seed()) + " vs " +
                        seed_to_hex(other.seed()));
  }
  if (other.t_ > config_.m - t_) throw StreamLengthError("merged stream exceeds the configured length m");
  std::vector<std::int64_t> next(counters_.size());
  for (std::size_t i = 0; i < counters_.size(); ++i) {
    if (__builtin_add_overflow(counters_[i], other.counters_[i], &next[i])) {
      throw OverflowError("sketch counter overflow during merge");
    }
  }
  counters_.swap(next);
  t_ += other.t_;
}

PStableSketch merge(const PStableSketch& a, const PStableSketch& b) {
  PStableSketch out = a;
  out.merge_from(b);
  return out;
}

SpaceAccount PStableSketch::space() const {
  return SpaceAccount{.counter_bits = counters_.size() * sizeof(std::int64_t) * 8,
                      .seed_bits = entries_.seeds().seed_bits()};
}

}  // namespace lptrack

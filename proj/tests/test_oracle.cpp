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

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "lptrack/error.hpp"
#include "lptrack/oracle.hpp"
#include "lptrack/sketch.hpp"
#include "lptrack/workload.hpp"

namespace lptrack {
namespace {

MasterSeed test_seed(std::uint64_t index) { return derive_seed(parse_seed_hex("07ac1e"), index); }

Stream items(std::initializer_list<std::uint64_t> list) {
  Stream s;
  for (auto a : list) s.push_back({a, 1});
  return s;
}

double naive_norm(const std::vector<std::uint64_t>& x, double p) {
  double sum = 0.0;
  for (auto v : x) sum += std::pow(static_cast<double>(v), p);
  return std::pow(sum, 1.0 / p);
}

TEST(FrequencyOracle, NormExamples) {
  FrequencyOracle l1(3, 1.0), l2(3, 2.0);
  EXPECT_EQ(l1.norm(), 0.0);
  for (const auto& u : items({1, 1, 2})) {
    l1.update(u.item);
    l2.update(u.item);
  }
  EXPECT_DOUBLE_EQ(l1.norm(), 3.0);
  EXPECT_NEAR(l2.norm(), 2.2360679775, 1e-10);
  EXPECT_EQ(l1.t(), 3u);
  EXPECT_THROW(l1.update(3), DomainError);
  EXPECT_THROW(l1.update(0, 0), DomainError);
  l2.reset();
  EXPECT_EQ(l2.norm(), 0.0);
  EXPECT_TRUE(std::all_of(l2.freq().begin(), l2.freq().end(), [](auto v) { return v == 0; }));
}

TEST(FrequencyOracle, IncrementalNormMatchesRecompute) {
  for (double p : {0.3, 0.5, 1.0, 1.5, 2.0}) {
    for (auto kind : {WorkloadKind::kUniform, WorkloadKind::kZipf, WorkloadKind::kLateBurst}) {
      const Stream stream = make_workload(kind, 200, 5000, test_seed(1));
      FrequencyOracle oracle(200, p);
      std::vector<std::uint64_t> x(200, 0);
      std::size_t k = 0;
      for (const auto& u : stream) {
        oracle.update(u.item, u.weight);
        x[u.item] += u.weight;
        if (++k % 97 == 0 || k == stream.size()) {
          const double expected = naive_norm(x, p);
          ASSERT_NEAR(oracle.norm(), expected, 1e-12 * expected) << p << " " << to_string(kind) << " " << k;
          ASSERT_NEAR(lp_norm(x, p), expected, 1e-12 * expected);
        }
      }
    }
  }
}

TEST(FrequencyOracle, SuperadditivityForPAtLeastOne) {
  SeedStream rng(test_seed(2), 0);
  for (double p : {1.0, 1.25, 1.5, 2.0}) {
    for (int trial = 0; trial < 200; ++trial) {
      // A random nonnegative vector split into random nonnegative increments.
      std::vector<std::vector<std::uint64_t>> parts(1 + rng.below(5), std::vector<std::uint64_t>(16, 0));
      std::vector<std::uint64_t> total(16, 0);
      for (int k = 0; k < 100; ++k) {
        const auto part = rng.below(parts.size()), item = rng.below(16);
        ++parts[part][item];
        ++total[item];
      }
      double sum = 0.0;
      for (const auto& part : parts) sum += std::pow(lp_norm(part, p), p);
      ASSERT_GE(std::pow(lp_norm(total, p), p), sum * (1 - 1e-12)) << p;
    }
  }
}

TEST(EpochPoints, SingleItemExample) {
  Stream stream(100, Update{0, 1});
  const EpochPlan plan = epoch_points(stream, 1, 0.5, 2.0);
  EXPECT_DOUBLE_EQ(plan.threshold, 25.0);
  EXPECT_EQ(plan.points, (std::vector<std::uint64_t>{25, 50, 75, 100}));
  EXPECT_EQ(plan.q, 3u);

  // A weighted update counts as unit updates.
  const EpochPlan weighted = epoch_points(Stream{{0, 60}, {0, 40}}, 1, 0.5, 2.0);
  EXPECT_EQ(weighted.points, plan.points);
}

TEST(EpochPoints, DegenerateStreams) {
  EXPECT_TRUE(epoch_points(Stream{}, 4, 0.5, 1.0).points.empty());
  const EpochPlan one = epoch_points(items({2}), 4, 0.5, 1.0);
  EXPECT_EQ(one.points, (std::vector<std::uint64_t>{1}));
  EXPECT_EQ(one.q, 0u);
  EXPECT_THROW(epoch_points(items({2}), 4, 1.0, 1.0), DomainError);
}

// Checks a plan against the definitions, recomputing every norm from scratch.
void expect_valid_plan(const Stream& stream, std::uint64_t n, double eps, double p, const EpochPlan& plan) {
  std::vector<std::uint64_t> unit;
  for (const auto& u : stream) unit.insert(unit.end(), u.weight, u.item);
  std::vector<std::uint64_t> x(n, 0);
  for (auto a : unit) ++x[a];
  const double theta = std::pow(eps, 4.0 / p) * naive_norm(x, p);
  ASSERT_NEAR(plan.threshold, theta, 1e-12 * theta);
  ASSERT_FALSE(plan.points.empty());
  ASSERT_EQ(plan.points.back(), unit.size());
  ASSERT_EQ(plan.q + 1, plan.points.size());
  ASSERT_LE(static_cast<double>(plan.q), std::pow(eps, -8.0 / p));

  std::fill(x.begin(), x.end(), 0);
  std::uint64_t first = 0;
  for (std::uint64_t t = 1; t <= unit.size() && first == 0; ++t) {
    ++x[unit[t - 1]];
    if (naive_norm(x, p) >= theta) first = t;
  }
  ASSERT_EQ(plan.points.front(), first);
  for (std::size_t j = 0; j + 1 < plan.points.size(); ++j) {
    std::vector<std::uint64_t> diff(n, 0);
    for (std::uint64_t t = plan.points[j] + 1; t <= plan.points[j + 1]; ++t) {
      ++diff[unit[t - 1]];
      const double norm = naive_norm(diff, p);
      if (t < plan.points[j + 1]) {
        ASSERT_LT(norm, theta) << "t=" << t;
      } else if (t != unit.size()) {
        ASSERT_GE(norm, theta) << "t=" << t;
      }
    }
  }
}

TEST(EpochPoints, PlansSatisfyTheirInvariants) {
  std::uint64_t index = 0;
  for (double p : {0.5, 1.0, 1.5, 2.0}) {
    for (double eps : {0.1, 0.3, 0.5}) {
      for (auto kind : {WorkloadKind::kUniform, WorkloadKind::kZipf, WorkloadKind::kSingleItem}) {
        for (int rep = 0; rep < 3; ++rep) {
          const Stream stream = make_workload(kind, 32, 400, test_seed(100 + index++));
          const EpochPlan plan = epoch_points(stream, 32, eps, p);
          SCOPED_TRACE(::testing::Message() << "p=" << p << " eps=" << eps << " " << to_string(kind));
          expect_valid_plan(stream, 32, eps, p, plan);
        }
      }
    }
  }
}

TEST(DeviantRows, Examples) {
  const std::vector<double> exact = {2.0, -2.0, 2.0};
  const auto none = deviant_row_counts(exact, 2.0, 0.25);
  EXPECT_EQ(none.below, 0u);
  EXPECT_EQ(none.above, 0u);
  const std::vector<double> mixed = {2.0, 1.0, -3.0, 2.5, -2.0};
  const auto zero = deviant_row_counts(mixed, 2.0, 0.0);
  EXPECT_EQ(zero.below + zero.above, 3u);
  const auto quarter = deviant_row_counts(mixed, 2.0, 0.25);
  EXPECT_EQ(quarter.below, 1u);
  EXPECT_EQ(quarter.above, 1u);
}

TEST(DeviantRows, BothCountsStayUnderHalf) {
  const Stream stream = make_workload(WorkloadKind::kZipf, 32, 500, test_seed(3));
  std::vector<std::uint64_t> x(32, 0);
  for (const auto& u : stream) x[u.item] += u.weight;
  const double norm = lp_norm(x, 1.0);
  int good = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    ReferenceSketch sketch(2120, 32, shared_law(1.0), test_seed(1000 + t));
    for (const auto& u : stream) sketch.update(u.item, u.weight);
    const auto rows = deviant_row_counts(sketch.counters(), norm, 0.25);
    good += 2 * rows.below < 2120 && 2 * rows.above < 2120;
  }
  EXPECT_GE(good, 190);
}

TEST(ReferenceSketch, SingleEntryCounter) {
  ReferenceSketch sketch(1, 10, shared_law(1.5), test_seed(4));
  sketch.update(7);
  EXPECT_EQ(sketch.counters()[0], sketch.entry(0, 7));
  EXPECT_EQ(sketch.estimate(), std::abs(sketch.entry(0, 7)));
  sketch.update(7, 3);
  EXPECT_DOUBLE_EQ(sketch.counters()[0], 4 * sketch.entry(0, 7));
  EXPECT_THROW(sketch.update(10), DomainError);
}

TEST(ReferenceSketch, RefusesLargeMatrices) {
  EXPECT_THROW(ReferenceSketch(10'001, 10'000, shared_law(1.0), test_seed(5)), DomainError);
  EXPECT_THROW(reference_sketch(1, 1, 1.0, items({0}), test_seed(5), 0), DomainError);
}

TEST(ReferenceSketch, SingleQueryGuarantee) {
  for (double p : {1.0, 1.5}) {
    const auto config = plan_config(p, 0.25, 0.1, 64, 2000, TrackingMode::kWeak);
    const Stream stream = make_workload(WorkloadKind::kZipf, 64, 2000, test_seed(6));
    std::vector<std::uint64_t> x(64, 0);
    for (const auto& u : stream) x[u.item] += u.weight;
    const double norm = lp_norm(x, p);
    int good = 0;
    for (std::uint64_t t = 0; t < 500; ++t) {
      ReferenceSketch sketch(config.d, 64, shared_law(p), test_seed(10'000 + t));
      for (std::uint64_t j = 0; j < 64; ++j) {
        if (x[j] > 0) sketch.update(j, x[j]);
      }
      good += std::abs(sketch.estimate() - norm) <= 0.25 * norm;
    }
    EXPECT_GE(good, 450) << p;
  }
}

TEST(ReferenceSketch, PerTimeEstimates) {
  const auto estimates = reference_sketch(5, 4, 2.0, items({0, 1, 2, 3, 0}), test_seed(7), 2);
  EXPECT_EQ(estimates.size(), 3u);
  ReferenceSketch sketch(5, 4, shared_law(2.0), test_seed(7));
  for (auto a : {0, 1, 2, 3, 0}) sketch.update(a);
  EXPECT_EQ(estimates.back(), sketch.estimate());
}

TEST(LowerMedian, PicksTheLowerOrderStatistic) {
  EXPECT_EQ(lower_median_abs(std::vector<double>{}), 0.0);
  EXPECT_EQ(lower_median_abs(std::vector<double>{-5, 2, 7}), 5.0);
  EXPECT_EQ(lower_median_abs(std::vector<double>{4, -1, 3, 2}), 2.0);
}

}  // namespace
}  // namespace lptrack

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
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "lptrack/error.hpp"
#include "lptrack/harness.hpp"
#include "lptrack/stats.hpp"
#include "lptrack/workload.hpp"

namespace lptrack {
namespace {

MasterSeed test_seed(std::uint64_t index) { return derive_seed(parse_seed_hex("4a7e55"), index); }

TEST(Stats, WilsonIntervalKnownValues) {
  const Interval zero = wilson_interval(0, 200);
  EXPECT_EQ(zero.lo, 0.0);
  EXPECT_NEAR(zero.hi, 0.018846, 1e-5);
  const Interval ten = wilson_interval(10, 100);
  EXPECT_NEAR(ten.lo, 0.05523, 1e-4);
  EXPECT_NEAR(ten.hi, 0.17437, 1e-4);
  EXPECT_THROW(wilson_interval(3, 2), DomainError);
}

TEST(Stats, BinomialTolerance) {
  EXPECT_NEAR(binomial_tolerance(0.1, 200), 0.1 + 2 * std::sqrt(0.09 / 200), 1e-15);
}

TEST(Stats, KsDistances) {
  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000);
  EXPECT_NEAR(ks_distance(grid, [](double x) { return std::clamp(x, 0.0, 1.0); }), 0.0005, 1e-12);
  std::vector<double> a = {1, 2, 3}, b = {1, 2, 3}, c = {4, 5};
  EXPECT_EQ(ks_two_sample(a, b), 0.0);
  EXPECT_EQ(ks_two_sample(a, c), 1.0);
  std::vector<double> ties = {1, 1, 1, 2}, other = {1, 2, 2, 2};
  EXPECT_NEAR(ks_two_sample(ties, other), 0.5, 1e-15);
}

TEST(Stats, LogLogFitRecoversAPowerLaw) {
  std::vector<TailPoint> rows;
  for (double lambda : {1.0, 2.0, 4.0, 8.0}) {
    rows.push_back({lambda, static_cast<std::uint64_t>(1e6 / (lambda * lambda)), 1'000'000});
  }
  rows.push_back({16.0, 3, 1'000'000});
  const LogLogFit fit = fit_loglog(rows, 2.0, 10);
  ASSERT_TRUE(fit.valid);
  EXPECT_EQ(fit.points, 3u);
  EXPECT_NEAR(fit.slope, -2.0, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_FALSE(fit_loglog(rows, 8.0, 10).valid);
}

TEST(ParallelFor, CoversEveryIndexAndRethrows) {
  std::vector<std::atomic<int>> seen(1000);
  parallel_for(1000, 4, [&](std::uint64_t i) { ++seen[i]; });
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](const auto& v) { return v.load() == 1; }));
  EXPECT_THROW(parallel_for(100, 3, [](std::uint64_t i) {
                 if (i == 57) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(Workloads, ShapesAndMass) {
  for (auto kind : {WorkloadKind::kUniform, WorkloadKind::kZipf, WorkloadKind::kSingleItem, WorkloadKind::kLateBurst}) {
    const Stream s = make_workload(kind, 1000, 100000, test_seed(1));
    EXPECT_EQ(stream_mass(s), 100000u) << to_string(kind);
    EXPECT_EQ(s, make_workload(kind, 1000, 100000, test_seed(1)));
    EXPECT_NE(s, make_workload(kind, 1000, 100000, test_seed(2)));
    EXPECT_EQ(parse_workload(to_string(kind)), kind);
    for (const auto& u : s) ASSERT_LT(u.item, 1000u);
  }
  const Stream single = make_workload(WorkloadKind::kSingleItem, 50, 100, test_seed(3));
  EXPECT_TRUE(std::all_of(single.begin(), single.end(), [&](const Update& u) { return u.item == single[0].item; }));
  try {
    parse_workload("heavy_tail");
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("heavy_tail"), std::string::npos);
  }
}

TEST(Workloads, LateBurstPutsHalfTheMassAtTheEnd) {
  const Stream s = make_workload(WorkloadKind::kLateBurst, 1000, 100000, test_seed(4));
  const std::uint64_t background = 50000;
  ASSERT_GT(s.size(), background);
  std::uint64_t burst = 0;
  for (std::size_t k = background; k < s.size(); ++k) {
    burst += s[k].weight;
    EXPECT_EQ(s[k].item, s[background].item);
  }
  EXPECT_EQ(burst, 50000u);
  EXPECT_LE(s.size() - background, s.size() / 100 + 1);
}

TEST(Workloads, ZipfFavoursLowRanks) {
  const ZipfSampler zipf(1000, kZipfExponent);
  std::vector<int> counts(1000, 0);
  SeedStream rng(test_seed(5), 0);
  for (int k = 0; k < 200000; ++k) ++counts[zipf.rank(rng.unit())];
  double h = 0.0;
  for (int r = 1; r <= 1000; ++r) h += std::pow(r, -kZipfExponent);
  EXPECT_NEAR(counts[0] / 200000.0, 1.0 / h, 0.005);
  EXPECT_NEAR(counts[1] / 200000.0, std::pow(2.0, -kZipfExponent) / h, 0.005);
}

TEST(Tracking, EmptyStream) {
  const auto config = plan_config(1.0, 0.25, 0.1, 10, 10, TrackingMode::kWeak);
  const TrackReport report = track_run(Stream{}, config, test_seed(6));
  EXPECT_EQ(report.queries, 0u);
  EXPECT_FALSE(report.weak_violation);
  EXPECT_FALSE(report.strong_violation);
}

TEST(Tracking, SingleItemErrorIsConstantInTime) {
  const auto config = plan_config(1.5, 0.25, 0.1, 10, 500, TrackingMode::kWeak);
  const Stream stream(500, Update{3, 1});
  const TrackReport report = track_run(stream, config, test_seed(7), {.keep_records = true});
  ASSERT_EQ(report.records.size(), 500u);
  const double per_item = report.records[0].estimate;
  for (const auto& r : report.records) {
    EXPECT_NEAR(r.estimate, per_item * r.t, 1e-12 * r.estimate);
    EXPECT_DOUBLE_EQ(r.exact, static_cast<double>(r.t));
    EXPECT_NEAR(r.rel_error, report.records[0].rel_error, 1e-9);
  }
}

TEST(Tracking, FastPathMatchesRecords) {
  // An undersized sketch makes violations common, so both branches are hit.
  for (auto kind : {WorkloadKind::kZipf, WorkloadKind::kLateBurst}) {
    for (double p : {0.5, 1.0, 2.0}) {
      SketchConfig config = plan_config(p, 0.1, 0.1, 100, 3000, TrackingMode::kWeak);
      config.d = 15;
      const Stream stream = make_workload(kind, 100, 3000, test_seed(8));
      for (std::uint64_t t = 0; t < 10; ++t) {
        for (std::uint64_t cadence : {1, 7}) {
          const auto seed = test_seed(100 + t);
          const TrackReport fast = track_run(stream, config, seed, {.cadence = cadence});
          const TrackReport full = track_run(stream, config, seed, {.cadence = cadence, .keep_records = true});
          ASSERT_EQ(fast.weak_violation, full.weak_violation);
          ASSERT_EQ(fast.strong_violation, full.strong_violation);
          ASSERT_EQ(fast.first_weak_t, full.first_weak_t);
          ASSERT_EQ(fast.first_strong_t, full.first_strong_t);
          ASSERT_EQ(fast.final_estimate, full.final_estimate);
          ASSERT_EQ(fast.queries, full.queries);
          ASSERT_EQ(fast.max_below, full.max_below);
          ASSERT_EQ(fast.epochs_checked, full.epochs_checked);
          // A weak violation is also a strong one because ||x^(t)|| <= ||x^(m)||.
          ASSERT_TRUE(!full.weak_violation || full.strong_violation);
          for (std::size_t k = 1; k < full.records.size(); ++k) {
            ASSERT_GT(full.records[k].t, full.records[k - 1].t);
            ASSERT_GE(full.records[k].exact, full.records[k - 1].exact);
          }
        }
      }
    }
  }
}

TEST(Tracking, UndersizedSketchFailsOften) {
  SketchConfig config = plan_config(1.0, 0.1, 0.1, 100, 2000, TrackingMode::kWeak);
  config.d = 5;
  const FailureRate rate = failure_rate(WorkloadKind::kZipf, test_seed(9), config, test_seed(10), 60);
  EXPECT_GT(rate.weak_rate, 0.5);
}

TEST(Tracking, CalibratedSketchRarelyFails) {
  const auto config = plan_config(1.0, 0.25, 0.1, 200, 5000, TrackingMode::kWeak);
  const FailureRate rate = failure_rate(WorkloadKind::kZipf, test_seed(11), config, test_seed(12), 60);
  EXPECT_LE(rate.weak_rate, binomial_tolerance(0.1, 60));
  EXPECT_LE(rate.weak_interval.lo, rate.weak_rate);
  EXPECT_GE(rate.weak_interval.hi, rate.weak_rate);
}

TEST(Tracking, FailureRateIsReproducibleAcrossThreadCounts) {
  SketchConfig config = plan_config(1.5, 0.2, 0.1, 100, 1000, TrackingMode::kStrong);
  config.d = 25;
  const auto serial = failure_rate(WorkloadKind::kUniform, test_seed(13), config, test_seed(14), 40, {}, 1);
  const auto parallel = failure_rate(WorkloadKind::kUniform, test_seed(13), config, test_seed(14), 40, {}, 4);
  EXPECT_EQ(serial.weak_violations, parallel.weak_violations);
  EXPECT_EQ(serial.strong_violations, parallel.strong_violations);
  ASSERT_EQ(serial.reports.size(), parallel.reports.size());
  for (std::size_t i = 0; i < serial.reports.size(); ++i) {
    EXPECT_EQ(serial.reports[i].final_estimate, parallel.reports[i].final_estimate);
    EXPECT_EQ(serial.reports[i].first_strong_t, parallel.reports[i].first_strong_t);
  }
  const Stream stream = make_workload(WorkloadKind::kUniform, 100, 1000, test_seed(13));
  const TrackReport trial3 = track_run(stream, config, derive_seed(test_seed(14), 3));
  EXPECT_EQ(trial3.final_estimate, serial.reports[3].final_estimate);
  EXPECT_THROW(failure_rate(stream, config, test_seed(14), 29), DomainError);
  SketchConfig short_config = config;
  short_config.m = 999;
  EXPECT_THROW(failure_rate(stream, short_config, test_seed(14), 30), StreamLengthError);
}

TEST(TailTests, ConstantChainNeverExceedsItsNorm) {
  const Stream chain(200, Update{5, 1});
  const TailReport report = chaining_test(chain, 16, {1.0, 1.5, 2.0}, test_seed(15), {.trials = 2000});
  for (const auto& row : report.rows) EXPECT_EQ(row.hits, 0u) << row.lambda;
}

TEST(TailTests, ConstantChainObeysChebyshev) {
  // For a constant chain the supremum is |<sigma, v>|, and 4-wise signs give
  // E <sigma, v>^2 = ||v||_2^2.
  const std::vector<double> v = frequency_vector(make_workload(WorkloadKind::kZipf, 64, 1000, test_seed(21)), 64);
  const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  const PrimeField field(next_prime(1ULL << 31));
  const int trials = 20000;
  std::vector<double> stats;
  for (int t = 0; t < trials; ++t) {
    SeedStream stream(test_seed(1000 + t), 0);
    const SignHash sigma(field, stream);
    double dot = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) dot += sigma(j) * v[j];
    stats.push_back(std::abs(dot) / norm);
  }
  for (double lambda : {1.0, 1.5, 2.0, 3.0}) {
    const auto hits = std::count_if(stats.begin(), stats.end(), [&](double s) { return s > lambda; });
    EXPECT_LE(static_cast<double>(hits) / trials, 1.0 / (lambda * lambda)) << lambda;
  }
}

TEST(TailTests, DistinctChainTailsDecay) {
  Stream chain;
  for (std::uint64_t a = 0; a < 256; ++a) chain.push_back({a, 1});
  const TailReport report = chaining_test(chain, 256, {1.0, 2.0, 3.0, 4.0}, test_seed(16), {.trials = 20000});
  for (std::size_t k = 1; k < report.rows.size(); ++k) EXPECT_LE(report.rows[k].hits, report.rows[k - 1].hits);
  for (const auto& row : report.rows) EXPECT_LE(row.probability(), 4.0 / (row.lambda * row.lambda)) << row.lambda;
}

TEST(TailTests, PaleyZygmundFloor) {
  for (const std::vector<double>& v : {std::vector<double>(3, 1.0), std::vector<double>(100, 1.0)}) {
    EXPECT_GE(paley_zygmund_fraction(v, 20000, test_seed(17)), 1.0 / 27 - 0.01);
  }
  EXPECT_THROW(paley_zygmund_fraction({}, 10, test_seed(17)), DomainError);
}

TEST(TailTests, SumOfSquaresOnABasisVectorIsTheStableTail) {
  std::vector<double> e1(8, 0.0);
  e1[0] = 1.0;
  const std::uint64_t trials = 40000;
  const auto law = shared_law(1.5);
  const TailReport report = sos_tail_test(1.5, 2, {1.0, 2.0, 4.0}, e1, test_seed(18), {.trials = trials});
  for (const auto& row : report.rows) {
    const double expected = 2.0 * law->survival(row.lambda);
    const double sigma = std::sqrt(expected * (1 - expected) / trials);
    EXPECT_NEAR(row.probability(), expected, 5 * sigma + 1e-4) << row.lambda;
  }
}

TEST(TailTests, MoreIndependenceDoesNotWidenTheTail) {
  const std::vector<double> x = frequency_vector(make_workload(WorkloadKind::kZipf, 128, 2048, test_seed(19)), 128);
  const std::vector<double> lambdas = {2.0, 4.0};
  const TailSetup setup{.trials = 20000};
  const TailReport low = sos_tail_test(1.0, 2, lambdas, x, test_seed(20), setup);
  const TailReport high = sos_tail_test(1.0, 64, lambdas, x, test_seed(20), setup);
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const double a = low.rows[k].probability(), b = high.rows[k].probability();
    EXPECT_LE(b, a + 5 * std::sqrt(a * (1 - a) / setup.trials) + 1e-3) << lambdas[k];
  }
}

}  // namespace
}  // namespace lptrack

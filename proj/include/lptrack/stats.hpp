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

// Small statistics toolkit for the harness: binomial intervals, KS distances
// and log-log tail fits.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace lptrack {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for k successes out of n at the given two-sided level.
Interval wilson_interval(std::uint64_t k, std::uint64_t n, double confidence = 0.95);

// delta + 2 sqrt(delta (1 - delta) / n): the tolerated violation fraction.
double binomial_tolerance(double delta, std::uint64_t n);

// sup |F_n - F|. Sorts samples in place.
double ks_distance(std::vector<double>& samples, const std::function<double(double)>& cdf);
// sup |F_a - F_b|. Sorts both in place.
double ks_two_sample(std::vector<double>& a, std::vector<double>& b);

// One row of an empirical tail: P(statistic >= lambda) over trials.
struct TailPoint {
  double lambda = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;

  double probability() const { return trials == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(trials); }
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;  // rows that entered the fit
  bool valid = false;      // false when fewer than two rows qualify
};

// Least-squares fit of log P against log lambda over rows with
// lambda >= min_lambda and at least min_hits hits.
LogLogFit fit_loglog(std::span<const TailPoint> rows, double min_lambda, std::uint64_t min_hits);

}  // namespace lptrack

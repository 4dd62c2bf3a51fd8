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

#include "lptrack/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/statistics/linear_regression.hpp>

#include "lptrack/error.hpp"

namespace lptrack {

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double confidence) {
  if (n == 0) return {0.0, 1.0};
  if (k > n) throw DomainError("wilson_interval: more successes than trials");
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + confidence / 2.0);
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double centre = (phat + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
  const double half = z / (1.0 + z2 / nn) * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn));
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double binomial_tolerance(double delta, std::uint64_t n) {
  return delta + 2.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(n));
}

double ks_distance(std::vector<double>& samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    worst = std::max({worst, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return worst;
}

double ks_two_sample(std::vector<double>& a, std::vector<double>& b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double worst = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
}

LogLogFit fit_loglog(std::span<const TailPoint> rows, double min_lambda, std::uint64_t min_hits) {
  std::vector<double> x;
  std::vector<double> y;
  for (const TailPoint& row : rows) {
    if (row.lambda < min_lambda || row.hits < std::max<std::uint64_t>(min_hits, 1)) continue;
    x.push_back(std::log(row.lambda));
    y.push_back(std::log(row.probability()));
  }
  LogLogFit fit;
  fit.points = x.size();
  if (x.size() < 2) return fit;
  const auto [c0, c1, r2] = boost::math::statistics::simple_ordinary_least_squares_with_R_squared(x, y);
  fit.intercept = c0;
  fit.slope = c1;
  fit.r_squared = r2;
  fit.valid = true;
  return fit;
}

}  // namespace lptrack

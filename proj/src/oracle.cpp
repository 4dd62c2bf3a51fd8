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

#include "lptrack/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "lptrack/error.hpp"

namespace lptrack {
namespace {

constexpr std::uint64_t kReferenceTag = 0x7265662d6d617472ULL;  // "ref-matr"

long double power(std::uint64_t c, double p) {
  if (c == 0) return 0.0L;
  if (p == 1.0) return static_cast<long double>(c);
  if (p == 2.0) return static_cast<long double>(c) * static_cast<long double>(c);
  return std::pow(static_cast<long double>(c), static_cast<long double>(p));
}

// Neumaier's compensated addition.
void accumulate(long double& sum, long double& comp, long double value) {
  const long double t = sum + value;
  if (std::fabs(sum) >= std::fabs(value)) {
    comp += (sum - t) + value;
  } else {
    comp += (value - t) + sum;
  }
  sum = t;
}

}  // namespace

std::uint64_t stream_mass(const Stream& stream) {
  std::uint64_t total = 0;
  for (const Update& u : stream) total += u.weight;
  return total;
}

double lp_norm(std::span<const std::uint64_t> x, double p) {
  long double sum = 0.0L;
  long double comp = 0.0L;
  for (std::uint64_t c : x) accumulate(sum, comp, power(c, p));
  return static_cast<double>(std::pow(sum + comp, 1.0L / static_cast<long double>(p)));
}

FrequencyOracle::FrequencyOracle(std::uint64_t n, double p) : freq_(n, 0), p_(p) {
  if (n < 1) throw DomainError("oracle needs n >= 1");
  if (!(p > 0.0 && p <= 2.0)) throw DomainError("oracle needs p in (0, 2]");
}

void FrequencyOracle::update(std::uint64_t a, std::uint64_t w) {
  if (a >= freq_.size()) throw DomainError("item " + std::to_string(a) + " outside [0, n)");
  if (w == 0) throw DomainError("update weight must be positive");
  const std::uint64_t before = freq_[a];
  if (before == 0) touched_.push_back(a);
  freq_[a] = before + w;
  t_ += w;
  accumulate(sum_, compensation_, power(before + w, p_) - power(before, p_));
}

void FrequencyOracle::reset() {
  for (std::uint64_t a : touched_) freq_[a] = 0;
  touched_.clear();
  t_ = 0;
  sum_ = 0.0L;
  compensation_ = 0.0L;
}

double FrequencyOracle::norm() const {
  const long double s = power_sum();
  if (s <= 0.0L) return 0.0;
  return static_cast<double>(std::pow(s, 1.0L / static_cast<long double>(p_)));
}

EpochPlan epoch_points(const Stream& stream, std::uint64_t n, double eps, double p) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("epoch construction needs eps in (0, 1)");
  FrequencyOracle total(n, p);
  for (const Update& u : stream) total.update(u.item, u.weight);

  EpochPlan plan;
  const std::uint64_t m = total.t();
  if (m == 0) return plan;
  plan.threshold = std::pow(eps, 4.0 / p) * total.norm();

  FrequencyOracle prefix(n, p);
  FrequencyOracle increment(n, p);
  bool started = false;
  for (const Update& u : stream) {
    for (std::uint64_t k = 0; k < u.weight; ++k) {
      if (!started) {
        prefix.update(u.item);
        if (prefix.norm() >= plan.threshold) {
          started = true;
          plan.points.push_back(prefix.t());
        }
        continue;
      }
      increment.update(u.item);
      if (increment.norm() >= plan.threshold) {
        plan.points.push_back(plan.points.back() + increment.t());
        increment.reset();
      }
    }
  }
  if (plan.points.empty() || plan.points.back() != m) plan.points.push_back(m);
  plan.q = plan.points.size() - 1;
  return plan;
}

DeviantRows deviant_row_counts(std::span<const double> counters, double norm, double eps) {
  DeviantRows out;
  const double lo = (1.0 - eps) * norm;
  const double hi = (1.0 + eps) * norm;
  for (double c : counters) {
    const double a = std::abs(c);
    out.below += a < lo;
    out.above += a > hi;
  }
  return out;
}

double lower_median_abs(std::span<const double> values) {
  if (values.empty()) return 0.0;
  std::vector<double> mags(values.size());
  std::transform(values.begin(), values.end(), mags.begin(), [](double v) { return std::abs(v); });
  const std::size_t k = (mags.size() + 1) / 2 - 1;
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end());
  return mags[k];
}

ReferenceSketch::ReferenceSketch(std::uint64_t d, std::uint64_t n, std::shared_ptr<const StableLaw> law,
                                 const MasterSeed& seed)
    : d_(d), n_(n) {
  if (d < 1 || n < 1) throw DomainError("reference sketch needs d, n >= 1");
  if (d > kReferenceCellLimit / n) throw DomainError("reference sketch refuses d * n > 1e8");
  if (!law) throw DomainError("reference sketch needs a law");
  SeedStream stream(seed, kReferenceTag);
  matrix_.resize(d * n);
  for (double& e : matrix_) {
    const double u1 = stream.unit();
    const double u2 = stream.unit();
    e = law->sample(u1, u2);
  }
  counters_.assign(d, 0.0);
}

void ReferenceSketch::update(std::uint64_t a, std::uint64_t w) {
  if (a >= n_) throw DomainError("item " + std::to_string(a) + " outside [0, n)");
  if (w == 0) throw DomainError("update weight must be positive");
  const double* column = matrix_.data() + a * d_;
  const auto weight = static_cast<double>(w);
  for (std::uint64_t i = 0; i < d_; ++i) counters_[i] += weight * column[i];
}

double ReferenceSketch::estimate() const { return lower_median_abs(counters_); }

std::vector<double> reference_sketch(std::uint64_t d, std::uint64_t n, double p, const Stream& stream,
                                     const MasterSeed& seed, std::uint64_t cadence) {
  if (cadence < 1) throw DomainError("cadence must be positive");
  ReferenceSketch sketch(d, n, shared_law(p), seed);
  std::vector<double> estimates;
  for (std::size_t k = 0; k < stream.size(); ++k) {
    sketch.update(stream[k].item, stream[k].weight);
    if ((k + 1) % cadence == 0 || k + 1 == stream.size()) estimates.push_back(sketch.estimate());
  }
  return estimates;
}

}  // namespace lptrack

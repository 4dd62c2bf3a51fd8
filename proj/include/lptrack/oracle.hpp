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

// Ground truth for tests and the harness: exact frequency vectors, the
// epoch points of the weak-tracking argument, and a fully independent
// materialized sketch.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "lptrack/prf.hpp"
#include "lptrack/stable.hpp"

namespace lptrack {

struct Update {
  std::uint64_t item = 0;
  std::uint64_t weight = 1;

  friend bool operator==(const Update&, const Update&) = default;
};

using Stream = std::vector<Update>;

// Total mass of a stream.
std::uint64_t stream_mass(const Stream& stream);

// l_p norm of a nonnegative vector, recomputed from scratch with compensated
// extended-precision summation.
double lp_norm(std::span<const std::uint64_t> x, double p);

class FrequencyOracle {
 public:
  FrequencyOracle(std::uint64_t n, double p);

  // Throws DomainError for a >= n or w == 0.
  void update(std::uint64_t a, std::uint64_t w = 1);
  // Zeroes every touched coordinate.
  void reset();

  std::uint64_t t() const { return t_; }
  double p() const { return p_; }
  std::span<const std::uint64_t> freq() const { return freq_; }
  // sum_i x_i^p, maintained incrementally.
  long double power_sum() const { return sum_ + compensation_; }
  double norm() const;

 private:
  std::vector<std::uint64_t> freq_;
  std::vector<std::uint64_t> touched_;
  std::uint64_t t_ = 0;
  double p_;
  long double sum_ = 0.0L;
  long double compensation_ = 0.0L;
};

struct EpochPlan {
  double threshold = 0.0;             // eps^(4/p) * ||x^(m)||_p
  std::vector<std::uint64_t> points;  // t_1 < ... < t_{q+1} = m, 1-based times
  std::uint64_t q = 0;
};

// Places t_1 at the first time with ||x^(t)||_p >= threshold and each next
// point at the first time the norm of the increment since the previous point
// reaches the threshold, ending at m. Times count unit insertions, so a
// weighted update spans several times.
EpochPlan epoch_points(const Stream& stream, std::uint64_t n, double eps, double p);

struct DeviantRows {
  std::uint64_t below = 0;  // |c| < (1 - eps) norm
  std::uint64_t above = 0;  // |c| > (1 + eps) norm
};

DeviantRows deviant_row_counts(std::span<const double> counters, double norm, double eps);

// Indyk's sketch with a materialized matrix of i.i.d. continuous entries
// (CMS sampler). Refuses d * n > 10^8.
class ReferenceSketch {
 public:
  ReferenceSketch(std::uint64_t d, std::uint64_t n, std::shared_ptr<const StableLaw> law, const MasterSeed& seed);

  void update(std::uint64_t a, std::uint64_t w = 1);
  double estimate() const;
  double entry(std::uint64_t i, std::uint64_t j) const { return matrix_[j * d_ + i]; }
  std::span<const double> counters() const { return counters_; }
  std::uint64_t rows() const { return d_; }

 private:
  std::uint64_t d_;
  std::uint64_t n_;
  std::vector<double> matrix_;  // column-major: the d entries of item j are contiguous
  std::vector<double> counters_;
};

inline constexpr std::uint64_t kReferenceCellLimit = 100'000'000;

// Estimate after every update (cadence 1) or every cadence-th update and the last.
std::vector<double> reference_sketch(std::uint64_t d, std::uint64_t n, double p, const Stream& stream,
                                     const MasterSeed& seed, std::uint64_t cadence = 1);

// Lower median of |values|; the estimator shared by both sketches.
double lower_median_abs(std::span<const double> values);

}  // namespace lptrack

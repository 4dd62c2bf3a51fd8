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

// Monte-Carlo verification of the tracking guarantees and of the tail bounds
// behind them.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lptrack/oracle.hpp"
#include "lptrack/prf.hpp"
#include "lptrack/sketch.hpp"
#include "lptrack/stats.hpp"
#include "lptrack/workload.hpp"

namespace lptrack {

// Runs body(0), ..., body(count - 1) on up to `threads` workers (0 means the
// hardware concurrency). Results must be written by index; the first
// exception is rethrown after all workers stop.
void parallel_for(std::uint64_t count, unsigned threads, const std::function<void(std::uint64_t)>& body);

// Exact quantities of one stream, shared by every trial that replays it.
struct StreamTruth {
  std::vector<std::uint64_t> times;  // mass after each update
  std::vector<double> norms;         // ||x^(t)||_p after each update
  double final_norm = 0.0;
  EpochPlan epochs;
};

StreamTruth stream_truth(const Stream& stream, std::uint64_t n, double p, double eps);

struct TrackRecord {
  std::uint64_t t = 0;
  double estimate = 0.0;
  double exact = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
};

struct EpochDiagnostic {
  std::uint64_t epoch_t = 0;  // t_j
  std::uint64_t query_t = 0;  // first query time >= t_j
  std::uint64_t below = 0;    // rows under (1 - eps) ||x||_p
  std::uint64_t above = 0;    // rows over (1 + eps) ||x||_p
};

struct TrackOptions {
  std::uint64_t cadence = 1;  // query after every cadence-th update and after the last
  bool keep_records = false;  // per-query records and per-epoch diagnostics
  EntryCache cache = EntryCache::kItems;
};

struct TrackReport {
  std::vector<TrackRecord> records;
  std::vector<EpochDiagnostic> diagnostics;
  std::uint64_t queries = 0;
  // |a_t - ||x^(t)||| > eps ||x^(m)|| at some query.
  bool weak_violation = false;
  // |a_t - ||x^(t)||| > eps ||x^(t)|| at some query with t >= 1.
  bool strong_violation = false;
  std::uint64_t first_weak_t = 0;  // 0 when there is none
  std::uint64_t first_strong_t = 0;
  double final_estimate = 0.0;
  double final_norm = 0.0;
  // Aggregates over epoch points.
  std::uint64_t epochs_checked = 0;
  std::uint64_t max_below = 0;
  std::uint64_t max_above = 0;
  std::uint64_t epochs_over_half = 0;  // epochs with below or above >= d/2
};

// Feeds sketch and oracle in lockstep. Throws what the sketch throws.
TrackReport track_run(const Stream& stream, const SketchConfig& config, const MasterSeed& seed,
                      const TrackOptions& options = {});
TrackReport track_run(const Stream& stream, const StreamTruth& truth, const SketchConfig& config,
                      const MasterSeed& seed, const TrackOptions& options = {});

struct FailureRate {
  std::uint64_t trials = 0;
  std::uint64_t weak_violations = 0;
  std::uint64_t strong_violations = 0;
  double weak_rate = 0.0;
  double strong_rate = 0.0;
  Interval weak_interval;
  Interval strong_interval;
  std::vector<TrackReport> reports;  // one per trial, trial i seeded by derive_seed(master, i)
};

// One fixed stream replayed under independent sketch seeds. Needs trials >= 30.
FailureRate failure_rate(const Stream& stream, const SketchConfig& config, const MasterSeed& master,
                         std::uint64_t trials, const TrackOptions& options = {}, unsigned threads = 0);
FailureRate failure_rate(WorkloadKind workload, const MasterSeed& workload_seed, const SketchConfig& config,
                         const MasterSeed& master, std::uint64_t trials, const TrackOptions& options = {},
                         unsigned threads = 0);

// Empirical tail P(statistic >= lambda) with a log-log fit.
struct TailReport {
  std::vector<TailPoint> rows;
  LogLogFit fit;
  double predicted_slope = 0.0;
  // Chaining and one-dimensional tails: C fitted at the first fitted row and
  // whether every row respects C / lambda^exponent.
  double fitted_constant = 0.0;
  bool dominated = false;
};

struct TailSetup {
  std::uint64_t n = 256;
  std::uint64_t m = 4096;
  std::uint64_t trials = 100'000;
  double min_lambda = 2.0;     // rows below this are reported but not fitted
  std::uint64_t min_hits = 10;  // rows with fewer hits are not fitted
  unsigned threads = 0;
};

// P(sup_k |<Z, x^(k)>| >= lambda ||x^(m)||_p) with s-wise p-stable Z and a
// fresh zipf chain per trial; predicted slope -2p/(2+p).
TailReport sup_tail_test(double p, std::uint32_t s, const std::vector<double>& lambdas, const MasterSeed& seed,
                         const TailSetup& setup = {});

// P(sum x_i^2 Z_i^2 >= lambda^2 ||x||_p^2) for a fixed x; predicted slope -p.
TailReport sos_tail_test(double p, std::uint32_t s, const std::vector<double>& lambdas,
                         const std::vector<double>& x, const MasterSeed& seed, const TailSetup& setup = {});

// P(sup_i |<sigma, v^(i)>| > lambda ||v^(m)||_2) for 4-wise signs over the
// prefixes of a fixed chain; checks domination by C / lambda^2.
TailReport chaining_test(const Stream& chain, std::uint64_t n, const std::vector<double>& lambdas,
                         const MasterSeed& seed, const TailSetup& setup = {});

// P(Z > lambda) from the law's sampler; checks domination by C / lambda^p
// with C fitted at the first lambda, predicted slope -p.
TailReport stable_tail_test(double p, const std::vector<double>& lambdas, std::uint64_t samples,
                            const MasterSeed& seed);

// Fraction of trials with <sigma, v>^2 >= (2/3) ||v||_2^2 under 4-wise signs.
double paley_zygmund_fraction(const std::vector<double>& v, std::uint64_t trials, const MasterSeed& seed,
                              unsigned threads = 0);

// Final frequency vector of a stream, as reals.
std::vector<double> frequency_vector(const Stream& stream, std::uint64_t n);

}  // namespace lptrack

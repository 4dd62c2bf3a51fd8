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

#include "lptrack/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "lptrack/error.hpp"

namespace lptrack {

void parallel_for(std::uint64_t count, unsigned threads, const std::function<void(std::uint64_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(count, 1)));
  if (threads <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

StreamTruth stream_truth(const Stream& stream, std::uint64_t n, double p, double eps) {
  StreamTruth truth;
  FrequencyOracle oracle(n, p);
  truth.times.reserve(stream.size());
  truth.norms.reserve(stream.size());
  for (const Update& u : stream) {
    oracle.update(u.item, u.weight);
    truth.times.push_back(oracle.t());
    truth.norms.push_back(oracle.norm());
  }
  truth.final_norm = oracle.norm();
  truth.epochs = epoch_points(stream, n, eps, p);
  return truth;
}

TrackReport track_run(const Stream& stream, const SketchConfig& config, const MasterSeed& seed,
                      const TrackOptions& options) {
  return track_run(stream, stream_truth(stream, config.n, config.p, config.eps), config, seed, options);
}

TrackReport track_run(const Stream& stream, const StreamTruth& truth, const SketchConfig& config,
                      const MasterSeed& seed, const TrackOptions& options) {
  if (options.cadence < 1) throw DomainError("query cadence must be positive");
  if (truth.norms.size() != stream.size()) throw DomainError("stream truth does not match the stream");

  PStableSketch sketch(config, seed, options.cache);
  TrackReport report;
  const double eps = config.eps;
  const double weak_band = eps * truth.final_norm;
  const std::uint64_t k = (config.d + 1) / 2;
  const std::vector<std::uint64_t>& epochs = truth.epochs.points;
  std::size_t next_epoch = 0;

  for (std::size_t idx = 0; idx < stream.size(); ++idx) {
    sketch.update(stream[idx].item, stream[idx].weight);
    const bool last = idx + 1 == stream.size();
    if ((idx + 1) % options.cadence != 0 && !last) continue;

    const std::uint64_t t = truth.times[idx];
    const double exact = truth.norms[idx];
    const double weak_lo = exact - weak_band;
    const double weak_hi = exact + weak_band;
    const double strong_lo = exact - eps * exact;
    const double strong_hi = exact + eps * exact;
    ++report.queries;

    bool weak_bad;
    bool strong_bad;
    if (options.keep_records || last) {
      const double a = sketch.estimate();
      weak_bad = a < weak_lo || a > weak_hi;
      strong_bad = a < strong_lo || a > strong_hi;
      if (options.keep_records) {
        const double abs_error = std::abs(a - exact);
        report.records.push_back({t, a, exact, abs_error, exact > 0.0 ? abs_error / exact : 0.0});
      }
      if (last) {
        report.final_estimate = a;
        report.final_norm = exact;
      }
    } else {
      // The lower median falls below lo iff at least k rows do, and exceeds
      // hi iff fewer than k rows are at most hi.
      const auto weak = sketch.rank_counts(weak_lo, weak_hi);
      const auto strong = sketch.rank_counts(strong_lo, strong_hi);
      weak_bad = weak.below >= k || weak.at_most < k;
      strong_bad = strong.below >= k || strong.at_most < k;
    }
    if (weak_bad && !report.weak_violation) {
      report.weak_violation = true;
      report.first_weak_t = t;
    }
    if (strong_bad && !report.strong_violation) {
      report.strong_violation = true;
      report.first_strong_t = t;
    }

    while (next_epoch < epochs.size() && epochs[next_epoch] <= t) {
      const auto rows = sketch.rank_counts(strong_lo, strong_hi);
      const EpochDiagnostic diag{epochs[next_epoch], t, rows.below, config.d - rows.at_most};
      ++report.epochs_checked;
      report.max_below = std::max(report.max_below, diag.below);
      report.max_above = std::max(report.max_above, diag.above);
      if (2 * diag.below >= config.d || 2 * diag.above >= config.d) ++report.epochs_over_half;
      if (options.keep_records) report.diagnostics.push_back(diag);
      ++next_epoch;
    }
  }
  return report;
}

FailureRate failure_rate(const Stream& stream, const SketchConfig& config, const MasterSeed& master,
                         std::uint64_t trials, const TrackOptions& options, unsigned threads) {
  if (trials < 30) throw DomainError("failure_rate needs at least 30 trials");
  if (stream_mass(stream) > config.m) throw StreamLengthError("workload exceeds the configured length m");
  const StreamTruth truth = stream_truth(stream, config.n, config.p, config.eps);
  FailureRate out;
  out.trials = trials;
  out.reports.resize(trials);
  parallel_for(trials, threads, [&](std::uint64_t i) {
    out.reports[i] = track_run(stream, truth, config, derive_seed(master, i), options);
  });
  for (const TrackReport& r : out.reports) {
    out.weak_violations += r.weak_violation;
    out.strong_violations += r.strong_violation;
  }
  const auto n = static_cast<double>(trials);
  out.weak_rate = static_cast<double>(out.weak_violations) / n;
  out.strong_rate = static_cast<double>(out.strong_violations) / n;
  out.weak_interval = wilson_interval(out.weak_violations, trials);
  out.strong_interval = wilson_interval(out.strong_violations, trials);
  return out;
}

FailureRate failure_rate(WorkloadKind workload, const MasterSeed& workload_seed, const SketchConfig& config,
                         const MasterSeed& master, std::uint64_t trials, const TrackOptions& options,
                         unsigned threads) {
  return failure_rate(make_workload(workload, config.n, config.m, workload_seed), config, master, trials, options,
                      threads);
}

std::vector<double> frequency_vector(const Stream& stream, std::uint64_t n) {
  std::vector<double> x(n, 0.0);
  for (const Update& u : stream) {
    if (u.item >= n) throw DomainError("item " + std::to_string(u.item) + " outside [0, n)");
    x[u.item] += static_cast<double>(u.weight);
  }
  return x;
}

}  // namespace lptrack

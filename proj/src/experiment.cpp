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

#include "lptrack/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "lptrack/error.hpp"
#include "lptrack/harness.hpp"
#include "lptrack/oracle.hpp"
#include "lptrack/sketch.hpp"
#include "lptrack/workload.hpp"

namespace lptrack {
namespace {

using nlohmann::json;

const std::vector<std::string> kKinds = {"tracking",      "single_query",    "epoch_bound",     "distribution",
                                         "sup_tail",      "sos_tail",        "paley_zygmund",   "exact_structure",
                                         "derandomization", "space_accounting"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::uint64_t kind_ordinal(const std::string& kind) {
  return static_cast<std::uint64_t>(std::find(kKinds.begin(), kKinds.end(), kind) - kKinds.begin());
}

MasterSeed criterion_root(const CriterionSpec& c, const std::string& master_seed) {
  return derive_seed(derive_seed(parse_seed_hex(master_seed), static_cast<std::uint64_t>(c.id)), kind_ordinal(c.kind));
}

double first_eps(const CriterionSpec& c) { return c.eps.front(); }

PlannerConstants constants_of(const CriterionSpec& c) { return PlannerConstants{c.c_d, c.c_r, c.c_s}; }

SketchConfig plan_for(const CriterionSpec& c, double p, double eps, TrackingMode mode) {
  return plan_config(p, eps, c.delta, c.n, c.m, mode, constants_of(c));
}

SketchConfig plan_for(const CriterionSpec& c, double p, double eps) { return plan_for(c, p, eps, parse_mode(c.mode)); }

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

std::vector<std::uint64_t> counts_of(const Stream& stream, std::uint64_t n) {
  std::vector<std::uint64_t> x(n, 0);
  for (const Update& u : stream) x[u.item] += u.weight;
  return x;
}

// Weighted replay of a frequency vector; bit-identical to the stream by linearity.
void absorb_counts(PStableSketch& sketch, const std::vector<std::uint64_t>& x) {
  for (std::uint64_t a = 0; a < x.size(); ++a) {
    if (x[a] > 0) sketch.update(a, x[a]);
  }
}

// ---------------------------------------------------------------- tracking

CriterionResult run_tracking(const CriterionSpec& c, const MasterSeed& root, unsigned threads) {
  CriterionResult out;
  const TrackingMode mode = parse_mode(c.mode);
  const double bound = binomial_tolerance(c.delta, c.trials);
  double worst = -1.0;
  std::string worst_at;
  bool pass = true;
  json combos = json::array();
  std::uint64_t combo = 0;
  for (double p : c.p) {
    for (const std::string& name : c.workloads) {
      const SketchConfig config = plan_for(c, p, first_eps(c));
      const Stream stream = make_workload(parse_workload(name), c.n, c.m, derive_seed(root, 1000 + combo));
      const MasterSeed trial_root = derive_seed(root, combo);
      TrackOptions options;
      options.cadence = c.cadence;
      const FailureRate fr = failure_rate(stream, config, trial_root, c.trials, options, threads);
      const double rate = mode == TrackingMode::kWeak ? fr.weak_rate : fr.strong_rate;
      const bool ok = rate <= bound;
      pass = pass && ok;
      if (rate > worst) {
        worst = rate;
        worst_at = "p=" + fmt(p) + " " + name;
      }
      std::uint64_t max_below = 0;
      std::uint64_t max_above = 0;
      std::uint64_t over_half = 0;
      for (std::uint64_t i = 0; i < fr.reports.size(); ++i) {
        const TrackReport& r = fr.reports[i];
        max_below = std::max(max_below, r.max_below);
        max_above = std::max(max_above, r.max_above);
        over_half += r.epochs_over_half;
        out.records.push_back({{"criterion", c.id},
                               {"kind", c.kind},
                               {"p", p},
                               {"workload", name},
                               {"trial", i},
                               {"seed", seed_to_hex(derive_seed(trial_root, i))},
                               {"t", c.m},
                               {"estimate", r.final_estimate},
                               {"exact", r.final_norm},
                               {"weak_violation", r.weak_violation},
                               {"strong_violation", r.strong_violation},
                               {"first_weak_t", r.first_weak_t},
                               {"first_strong_t", r.first_strong_t},
                               {"epochs", r.epochs_checked},
                               {"max_below", r.max_below},
                               {"max_above", r.max_above}});
      }
      const StreamTruth truth = stream_truth(stream, c.n, p, first_eps(c));
      combos.push_back({{"p", p},
                        {"workload", name},
                        {"d", config.d},
                        {"r", config.r},
                        {"s", config.s},
                        {"tau", config.tau},
                        {"weak_rate", fr.weak_rate},
                        {"strong_rate", fr.strong_rate},
                        {"weak_wilson", interval_json(fr.weak_interval)},
                        {"strong_wilson", interval_json(fr.strong_interval)},
                        {"bound", bound},
                        {"pass", ok},
                        {"epoch_q", truth.epochs.q},
                        {"max_below", max_below},
                        {"max_above", max_above},
                        {"epochs_over_half", over_half}});
      if (c.trace_every > 0) {
        TrackOptions trace;
        trace.cadence = c.trace_every;
        trace.keep_records = true;
        const TrackReport r = track_run(stream, truth, config, derive_seed(trial_root, 0), trace);
        for (const TrackRecord& rec : r.records) {
          std::ostringstream row;
          row.precision(17);
          row << c.id << ',' << p << ',' << name << ',' << rec.t << ',' << rec.estimate << ',' << rec.exact << ','
              << rec.abs_error << ',' << rec.rel_error;
          out.trace_rows.push_back(row.str());
        }
      }
      ++combo;
    }
  }
  out.pass = pass;
  out.metrics = {{"combos", combos}, {"bound", bound}, {"mode", c.mode}};
  out.detail = "worst " + c.mode + "-violation fraction " + fmt(worst) + " (" + worst_at + ") vs bound " + fmt(bound);
  return out;
}

// ------------------------------------------------------------ single query

CriterionResult run_single_query(const CriterionSpec& c, const MasterSeed& root, unsigned threads) {
  CriterionResult out;
  const double eps = first_eps(c);
  const double bound = binomial_tolerance(c.delta, c.trials);
  bool pass = true;
  double worst = -1.0;
  std::string worst_at;
  json combos = json::array();
  std::uint64_t combo = 0;
  for (double p : c.p) {
    for (const std::string& name : c.workloads) {
      const SketchConfig config = plan_for(c, p, eps, TrackingMode::kWeak);
      const Stream stream = make_workload(parse_workload(name), c.n, c.m, derive_seed(root, 1000 + combo));
      const std::vector<std::uint64_t> x = counts_of(stream, c.n);
      const double norm = lp_norm(x, p);
      const MasterSeed trial_root = derive_seed(root, combo);
      std::vector<double> estimates(c.trials);
      parallel_for(c.trials, threads, [&](std::uint64_t i) {
        PStableSketch sketch(config, derive_seed(trial_root, i), EntryCache::kRowSeeds);
        absorb_counts(sketch, x);
        estimates[i] = sketch.estimate();
      });
      std::uint64_t failures = 0;
      for (std::uint64_t i = 0; i < c.trials; ++i) {
        const bool bad = estimates[i] < (1.0 - eps) * norm || estimates[i] > (1.0 + eps) * norm;
        failures += bad;
        out.records.push_back({{"criterion", c.id}, {"kind", c.kind}, {"p", p}, {"workload", name}, {"trial", i},
                               {"t", c.m}, {"estimate", estimates[i]}, {"exact", norm}, {"within", !bad}});
      }
      const double rate = static_cast<double>(failures) / static_cast<double>(c.trials);
      const bool ok = rate <= bound;
      pass = pass && ok;
      if (rate > worst) {
        worst = rate;
        worst_at = "p=" + fmt(p) + " " + name;
      }
      combos.push_back({{"p", p}, {"workload", name}, {"d", config.d}, {"failure_rate", rate},
                        {"wilson", interval_json(wilson_interval(failures, c.trials))}, {"bound", bound},
                        {"pass", ok}});
      ++combo;
    }
  }
  out.pass = pass;
  out.metrics = {{"combos", combos}, {"bound", bound}};
  out.detail = "worst miss fraction " + fmt(worst) + " (" + worst_at + ") vs bound " + fmt(bound);
  return out;
}

// ------------------------------------------------------------- epoch bound

// Checks a plan against the definition with norms recomputed from scratch.
// Returns an empty string when the plan is valid.
std::string check_epoch_plan(const Stream& stream, std::uint64_t n, double eps, double p, const EpochPlan& plan) {
  std::vector<std::uint64_t> unit;
  for (const Update& u : stream) unit.insert(unit.end(), u.weight, u.item);
  const std::uint64_t m = unit.size();
  std::vector<std::uint64_t> x(n, 0);
  for (std::uint64_t a : unit) ++x[a];
  const double expected = std::pow(eps, 4.0 / p) * lp_norm(x, p);
  if (!(std::abs(plan.threshold - expected) <= 1e-12 * expected)) return "threshold " + fmt(plan.threshold);
  const double theta = plan.threshold;

  const std::vector<std::uint64_t>& pts = plan.points;
  if (pts.empty() || pts.back() != m) return "plan does not end at m";
  if (plan.q + 1 != pts.size()) return "q does not match the point count";
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (pts[k] <= pts[k - 1]) return "points not increasing";
  }
  if (static_cast<double>(plan.q) > std::pow(eps, -8.0 / p)) return "q = " + std::to_string(plan.q) + " over bound";

  // t_1 is the first time the prefix norm reaches theta.
  std::fill(x.begin(), x.end(), 0);
  for (std::uint64_t t = 1; t <= pts[0]; ++t) {
    ++x[unit[t - 1]];
    const bool reached = lp_norm(x, p) >= theta;
    if (reached != (t == pts[0])) return "t_1 misplaced";
  }
  // Between points the increment stays below theta; it reaches theta at each
  // point except possibly the forced final one.
  std::vector<std::uint64_t> diff(n, 0);
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    std::fill(diff.begin(), diff.end(), 0);
    for (std::uint64_t t = pts[j] + 1; t <= pts[j + 1]; ++t) {
      ++diff[unit[t - 1]];
      const double norm = lp_norm(diff, p);
      if (t < pts[j + 1] && !(norm < theta)) return "increment reaches theta inside an epoch";
      if (t == pts[j + 1] && !(norm >= theta) && t != m) return "point placed before theta is reached";
    }
  }
  return {};
}

CriterionResult run_epoch_bound(const CriterionSpec& c, const MasterSeed& root, unsigned /*threads*/) {
  CriterionResult out;
  struct Cell {
    double p;
    double eps;
    std::string workload;
  };
  std::vector<Cell> grid;
  for (double p : c.p)
    for (double eps : c.eps)
      for (const std::string& w : c.workloads) grid.push_back({p, eps, w});
  std::uint64_t failures = 0;
  std::uint64_t max_q = 0;
  double max_share = 0.0;
  std::string first_failure;
  for (std::uint64_t i = 0; i < c.trials; ++i) {
    const Cell& cell = grid[i % grid.size()];
    const Stream stream = make_workload(parse_workload(cell.workload), c.n, c.m, derive_seed(root, i));
    const EpochPlan plan = epoch_points(stream, c.n, cell.eps, cell.p);
    const std::string problem = check_epoch_plan(stream, c.n, cell.eps, cell.p, plan);
    max_q = std::max(max_q, plan.q);
    max_share = std::max(max_share, static_cast<double>(plan.q) / std::pow(cell.eps, -8.0 / cell.p));
    if (!problem.empty()) {
      ++failures;
      if (first_failure.empty()) {
        first_failure = "stream " + std::to_string(i) + " (p=" + fmt(cell.p) + " eps=" + fmt(cell.eps) + " " +
                        cell.workload + "): " + problem;
      }
    }
    out.records.push_back({{"criterion", c.id}, {"kind", c.kind}, {"stream", i}, {"p", cell.p}, {"eps", cell.eps},
                           {"workload", cell.workload}, {"q", plan.q}, {"threshold", plan.threshold},
                           {"valid", problem.empty()}});
  }
  out.pass = failures == 0;
  out.metrics = {{"streams", c.trials}, {"invalid", failures}, {"max_q", max_q}, {"max_q_over_bound", max_share}};
  out.detail = std::to_string(c.trials - failures) + "/" + std::to_string(c.trials) +
               " plans valid, max q/eps^(-8/p) = " + fmt(max_share);
  if (!first_failure.empty()) out.detail += "; first failure: " + first_failure;
  return out;
}

// ------------------------------------------------------------ distribution

CriterionResult run_distribution(const CriterionSpec& c, const MasterSeed& root, unsigned threads) {
  CriterionResult out;
  bool pass = true;
  json rows = json::array();
  double worst_mass = 0.0;
  double worst_ks = 0.0;
  const double gauss_q75 = boost::math::quantile(boost::math::normal(), 0.75);
  std::vector<double> samples(c.samples);
  for (std::size_t k = 0; k < c.p.size(); ++k) {
    const double p = c.p[k];
    const auto law = shared_law(p);
    // Chunked so the result does not depend on the thread count.
    constexpr std::uint64_t kChunk = 1 << 16;
    const std::uint64_t chunks = (c.samples + kChunk - 1) / kChunk;
    const MasterSeed seed = derive_seed(root, k);
    parallel_for(chunks, threads, [&](std::uint64_t chunk) {
      SeedStream stream(derive_seed(seed, chunk), 0x73616d706c65ULL);
      const std::uint64_t end = std::min(c.samples, (chunk + 1) * kChunk);
      for (std::uint64_t i = chunk * kChunk; i < end; ++i) {
        const double u1 = stream.unit();
        const double u2 = stream.unit();
        samples[i] = law->sample(u1, u2);
      }
    });
    const auto outside = static_cast<double>(
        std::count_if(samples.begin(), samples.end(), [](double z) { return std::abs(z) > 1.0; }));
    const double mass = outside / static_cast<double>(c.samples);
    const bool mass_ok = std::abs(mass - 0.5) <= c.tolerance;
    json row = {{"p", p}, {"mass_above_1", mass}, {"mass_ok", mass_ok}};
    worst_mass = std::max(worst_mass, std::abs(mass - 0.5));
    bool ks_ok = true;
    if (p == 1.0 || p == 2.0) {
      const auto cdf = p == 1.0 ? std::function<double(double)>([](double x) { return 0.5 + std::atan(x) / M_PI; })
                                : std::function<double(double)>([gauss_q75](double x) {
                                    return 0.5 * std::erfc(-x * gauss_q75 / std::sqrt(2.0));
                                  });
      const double ks = ks_distance(samples, cdf);
      ks_ok = ks < c.tolerance;
      worst_ks = std::max(worst_ks, ks);
      row["ks"] = ks;
      row["ks_ok"] = ks_ok;
    }
    pass = pass && mass_ok && ks_ok;
    rows.push_back(row);
  }
  out.pass = pass;
  out.metrics = {{"laws", rows}, {"tolerance", c.tolerance}};
  out.detail = "max |P(|Z|>1) - 0.5| = " + fmt(worst_mass) + ", max KS = " + fmt(worst_ks) + " (limit " +
               fmt(c.tolerance) + ")";
  return out;
}

// ------------------------------------------------------------------- tails

json tail_json(const TailReport& r) {
  json rows = json::array();
  for (const TailPoint& row : r.rows) {
    rows.push_back({{"lambda", row.lambda}, {"hits", row.hits}, {"trials", row.trials},
                    {"probability", row.probability()},
                    {"wilson", interval_json(wilson_interval(row.hits, row.trials))}});
  }
  return {{"rows", rows},
          {"slope", r.fit.valid ? json(r.fit.slope) : json(nullptr)},
          {"fit_points", r.fit.points},
          {"r_squared", r.fit.r_squared},
          {"predicted_slope", r.predicted_slope}};
}

std::vector<double> zipf_vector(const CriterionSpec& c, const MasterSeed& root) {
  return frequency_vector(make_workload(WorkloadKind::kZipf, c.n, c.m, derive_seed(root, 1000)), c.n);
}

CriterionResult run_tail(const CriterionSpec& c, const MasterSeed& root, unsigned threads) {
  CriterionResult out;
  const bool sup = c.kind == "sup_tail";
  TailSetup setup;
  setup.n = c.n;
  setup.m = c.m;
  setup.trials = c.trials;
  setup.threads = threads;
  bool pass = true;
  json laws = json::array();
  std::string detail;
  for (std::size_t k = 0; k < c.p.size(); ++k) {
    const double p = c.p[k];
    const std::uint32_t s = plan_for(c, p, first_eps(c)).s;
    const MasterSeed seed = derive_seed(root, k);
    const TailReport r = sup ? sup_tail_test(p, s, c.lambdas, seed, setup)
                             : sos_tail_test(p, s, c.lambdas, zipf_vector(c, root), seed, setup);
    const bool ok = r.fit.valid && std::abs(r.fit.slope - r.predicted_slope) <= c.tolerance;
    pass = pass && ok;
    json j = tail_json(r);
    j["p"] = p;
    j["s"] = s;
    j["pass"] = ok;
    laws.push_back(j);
    if (!detail.empty()) detail += ", ";
    detail += "p=" + fmt(p) + " slope " + (r.fit.valid ? fmt(r.fit.slope) : std::string("n/a")) + " vs " +
              fmt(r.predicted_slope);
  }
  out.pass = pass;
  out.metrics = {{"laws", laws}, {"tolerance", c.tolerance}};
  out.detail = c.kind + ": " + detail + " (+-" + fmt(c.tolerance) + ")";
  return out;
}

// ----------------------------------------------------------- Paley-Zygmund

CriterionResult run_paley_zygmund(const CriterionSpec& c, const MasterSeed& root, unsigned threads) {
  CriterionResult out;
  std::vector<std::pair<std::string, std::vector<double>>> vectors;
  vectors.emplace_back("ones_3", std::vector<double>(3, 1.0));
  vectors.emplace_back("ones_" + std::to_string(c.n), std::vector<double>(c.n, 1.0));
  vectors.emplace_back("zipf_frequencies", zipf_vector(c, root));
  {
    SeedStream stream(derive_seed(root, 2000), 0x76656374ULL);
    std::vector<double> v(32);
    for (double& e : v) e = stream.unit();
    vectors.emplace_back("uniform_32", v);
  }
  const double target = 1.0 / 27.0 - c.tolerance;
  double worst = 1.0;
  std::string worst_at;
  json rows = json::array();
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    const double f = paley_zygmund_fraction(vectors[k].second, c.trials, derive_seed(root, k), threads);
    rows.push_back({{"vector", vectors[k].first}, {"fraction", f}});
    if (f < worst) {
      worst = f;
      worst_at = vectors[k].first;
    }
  }
  out.pass = worst >= target;
  out.metrics = {{"vectors", rows}, {"target", target}};
  out.detail = "min fraction " + fmt(worst) + " (" + worst_at + ") vs 1/27 - " + fmt(c.tolerance) + " = " + fmt(target);
  return out;
}

// --------------------------------------------------------- exact structure

bool same_state(const PStableSketch& a, const PStableSketch& b) {
  return a.t() == b.t() && std::equal(a.counters().begin(), a.counters().end(), b.counters().begin(),
                                      b.counters().end());
}

PStableSketch sketch_of(const SketchConfig& config, const MasterSeed& seed, const Stream& stream, std::size_t begin,
                        std::size_t end, EntryCache cache = EntryCache::kItems) {
  PStableSketch sk(config, seed, cache);
  for (std::size_t k = begin; k < end; ++k) sk.update(stream[k].item, stream[k].weight);
  return sk;
}

// Every input pair of 2x + b over F_5 hits each output pair exactly once.
bool exhaustive_pairwise_f5() {
  const PrimeField field(5);
  for (std::uint64_t x = 0; x < 5; ++x) {
    for (std::uint64_t y = 0; y < 5; ++y) {
      if (x == y) continue;
      std::map<std::pair<std::uint64_t, std::uint64_t>, int> seen;
      for (std::uint64_t a1 = 0; a1 < 5; ++a1) {
        for (std::uint64_t a0 = 0; a0 < 5; ++a0) {
          const KWiseHash h(field, {a1, a0});
          ++seen[{h(x), h(y)}];
        }
      }
      if (seen.size() != 25) return false;
      for (const auto& [pair, count] : seen) {
        if (count != 1) return false;
      }
    }
  }
  return true;
}

CriterionResult run_exact_structure(const CriterionSpec& c, const MasterSeed& root, unsigned /*threads*/) {
  CriterionResult out;
  std::vector<std::string> failed;
  json checks = json::object();
  auto record = [&](const std::string& name, bool ok) {
    checks[name] = (!checks.contains(name) || checks[name].get<bool>()) && ok;
    if (!ok && std::find(failed.begin(), failed.end(), name) == failed.end()) failed.push_back(name);
  };

  record("pairwise_f5", exhaustive_pairwise_f5());

  for (std::size_t k = 0; k < c.p.size(); ++k) {
    const double p = c.p[k];
    const SketchConfig config = plan_for(c, p, first_eps(c), TrackingMode::kWeak);
    const MasterSeed seed = derive_seed(root, k);
    const Stream stream = make_workload(WorkloadKind::kZipf, c.n, c.m, derive_seed(root, 1000 + k));
    const PStableSketch full = sketch_of(config, seed, stream, 0, stream.size());

    // Linearity: split anywhere, merge, compare.
    SeedStream splits(derive_seed(root, 2000 + k), 0x73706c6974ULL);
    bool linear = true;
    for (std::uint64_t i = 0; i < c.trials; ++i) {
      const std::size_t cut = splits.below(stream.size() + 1);
      PStableSketch left = sketch_of(config, seed, stream, 0, cut);
      const PStableSketch right = sketch_of(config, seed, stream, cut, stream.size());
      left.merge_from(right);
      linear = linear && same_state(left, full);
    }
    const PStableSketch empty(config, seed);
    linear = linear && same_state(merge(full, empty), full) && empty.estimate() == 0.0;
    record("linearity_merge", linear);

    // Permutation invariance and weighted-update equivalence.
    Stream shuffled = stream;
    {
      SeedStream order(derive_seed(root, 3000 + k), 0x7065726dULL);
      for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[order.below(i)]);
    }
    record("permutation_invariance", same_state(sketch_of(config, seed, shuffled, 0, shuffled.size()), full));
    PStableSketch weighted(config, seed, EntryCache::kRowSeeds);
    absorb_counts(weighted, counts_of(stream, c.n));
    record("weighted_updates", same_state(weighted, full));

    // Serialization round trip and corruption.
    const std::vector<std::uint8_t> bytes = full.serialize();
    const PStableSketch back = PStableSketch::deserialize(bytes);
    record("serialization_round_trip", same_state(back, full) && back.seed() == full.seed() &&
                                           same_layout(back.config(), full.config()) && back.serialize() == bytes &&
                                           back.estimate() == full.estimate());
    bool rejects = true;
    for (std::size_t cut : {std::size_t{0}, std::size_t{1}, bytes.size() / 2, bytes.size() - 1}) {
      try {
        (void)PStableSketch::deserialize(std::span(bytes).first(cut));
        rejects = false;
      } catch (const FormatError&) {
      }
    }
    std::vector<std::uint8_t> flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x10;
    try {
      (void)PStableSketch::deserialize(flipped);
      rejects = false;
    } catch (const FormatError&) {
    }
    record("serialization_rejects_corruption", rejects);

    // Replayability: a cache-free sketch and fresh generators agree exactly.
    const std::size_t prefix = std::min<std::size_t>(stream.size(), 2000);
    record("replayability", same_state(sketch_of(config, seed, stream, 0, prefix, EntryCache::kNone),
                                       sketch_of(config, seed, stream, 0, prefix, EntryCache::kItems)));
    const PStableSketch again(config, seed);
    bool replay = true;
    SeedStream cells(derive_seed(root, 4000 + k), 0x63656c6cULL);
    for (int q = 0; q < 200; ++q) {
      const std::uint64_t i = cells.below(config.d);
      const std::uint64_t j = cells.below(config.n);
      const auto row = full.entries().seeds().row_seed(i);
      replay = replay && again.entries().entry(i, j) == full.entries().entry(i, j) &&
               full.entries().entry_from_seed(row, j) == full.entries().entry(i, j);
    }
    record("replayability", replay);

    // Mismatched seeds refuse to merge.
    MasterSeed other = seed;
    other[0] ^= 1;
    bool refused = false;
    try {
      (void)merge(full, PStableSketch(config, other));
    } catch (const MismatchError&) {
      refused = true;
    }
    record("merge_rejects_other_seed", refused);
  }

  out.pass = failed.empty();
  out.metrics = {{"checks", checks}};
  if (failed.empty()) {
    out.detail = std::to_string(checks.size()) + " exact checks hold";
  } else {
    out.detail = "failed:";
    for (const auto& f : failed) out.detail += " " + f;
  }
  return out;
}

// --------------------------------------------------------- derandomization

CriterionResult run_derandomization(const CriterionSpec& c, const MasterSeed& root, unsigned threads) {
  CriterionResult out;
  bool pass = true;
  double worst = 0.0;
  std::string worst_at;
  json combos = json::array();
  std::uint64_t combo = 0;
  for (double p : c.p) {
    for (const std::string& name : c.workloads) {
      const SketchConfig config = plan_for(c, p, first_eps(c), TrackingMode::kWeak);
      const Stream stream = make_workload(parse_workload(name), c.n, c.m, derive_seed(root, 1000 + combo));
      const std::vector<std::uint64_t> x = counts_of(stream, c.n);
      const auto law = shared_law(p);
      const MasterSeed sketch_root = derive_seed(root, 2 * combo);
      const MasterSeed reference_root = derive_seed(root, 2 * combo + 1);
      std::vector<double> derandomized(c.trials);
      std::vector<double> independent(c.trials);
      parallel_for(c.trials, threads, [&](std::uint64_t i) {
        PStableSketch sketch(config, derive_seed(sketch_root, i), EntryCache::kRowSeeds);
        absorb_counts(sketch, x);
        derandomized[i] = sketch.estimate();
        ReferenceSketch reference(config.d, c.n, law, derive_seed(reference_root, i));
        for (std::uint64_t a = 0; a < x.size(); ++a) {
          if (x[a] > 0) reference.update(a, x[a]);
        }
        independent[i] = reference.estimate();
      });
      const double norm = lp_norm(x, p);
      for (std::uint64_t i = 0; i < c.trials; ++i) {
        out.records.push_back({{"criterion", c.id}, {"kind", c.kind}, {"p", p}, {"workload", name}, {"trial", i},
                               {"t", c.m}, {"estimate", derandomized[i]}, {"reference", independent[i]},
                               {"exact", norm}});
      }
      const double ks = ks_two_sample(derandomized, independent);
      const bool ok = ks < c.tolerance;
      pass = pass && ok;
      if (ks >= worst) {
        worst = ks;
        worst_at = "p=" + fmt(p) + " " + name;
      }
      combos.push_back({{"p", p}, {"workload", name}, {"d", config.d}, {"s", config.s}, {"ks", ks}, {"pass", ok}});
      ++combo;
    }
  }
  out.pass = pass;
  out.metrics = {{"combos", combos}, {"tolerance", c.tolerance}};
  out.detail = "max two-sample KS " + fmt(worst) + " (" + worst_at + ") vs " + fmt(c.tolerance);
  return out;
}

// -------------------------------------------------------- space accounting

CriterionResult run_space_accounting(const CriterionSpec& c, const MasterSeed& root, unsigned /*threads*/) {
  CriterionResult out;
  bool exact = true;
  bool shape = true;
  double worst = 0.0;
  json rows = json::array();
  for (double p : c.p) {
    SpaceAccount prev;
    double prev_eps = 0.0;
    for (std::size_t k = 0; k < c.eps.size(); ++k) {
      const double eps = c.eps[k];
      const SketchConfig config = plan_for(c, p, eps, TrackingMode::kWeak);
      const PStableSketch sketch(config, derive_seed(root, k));
      const SpaceAccount got = sketch.space();
      const SpaceAccount formula = space_formula(config);
      const auto prime_bits = static_cast<std::uint64_t>(std::bit_width(config.field_prime() - 1));
      const bool match = got == formula && got.counter_bits == config.d * 64 &&
                         got.seed_bits == std::uint64_t{config.r} * config.s * prime_bits;
      exact = exact && match;
      json row = {{"p", p}, {"eps", eps}, {"d", config.d}, {"r", config.r}, {"s", config.s},
                  {"counter_bits", got.counter_bits}, {"seed_bits", got.seed_bits}, {"formula_match", match}};
      if (k > 0) {
        const double log_ratio = (std::log(1.0 / eps) + std::log(1.0 / c.delta)) /
                                 (std::log(1.0 / prev_eps) + std::log(1.0 / c.delta));
        const double shrink = prev_eps / eps;
        const double counter_ratio = static_cast<double>(got.counter_bits) / static_cast<double>(prev.counter_bits);
        const double seed_ratio = static_cast<double>(got.seed_bits) / static_cast<double>(prev.seed_bits);
        const double counter_pred = shrink * shrink * log_ratio;
        const double seed_pred = std::pow(shrink, p) * log_ratio;
        const double dev = std::max(std::abs(counter_ratio / counter_pred - 1.0), std::abs(seed_ratio / seed_pred - 1.0));
        worst = std::max(worst, dev);
        shape = shape && dev <= c.tolerance;
        row["counter_ratio"] = counter_ratio;
        row["counter_predicted"] = counter_pred;
        row["seed_ratio"] = seed_ratio;
        row["seed_predicted"] = seed_pred;
      }
      rows.push_back(row);
      prev = got;
      prev_eps = eps;
    }
  }
  out.pass = exact && shape;
  out.metrics = {{"rows", rows}, {"tolerance", c.tolerance}};
  out.detail = std::string(exact ? "bit counts match the formulas" : "bit counts DIFFER from the formulas") +
               ", worst shape deviation " + fmt(worst) + " (band " + fmt(c.tolerance) + ")";
  return out;
}

// ------------------------------------------------------------- spec I/O

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void from_json(const json& j, CriterionSpec& c) {
  static const std::set<std::string> keys = {"id",       "name",    "kind",        "p",       "eps",     "delta",
                                             "n",        "m",       "mode",        "workloads", "trials", "cadence",
                                             "trace_every", "lambdas", "samples",  "tolerance", "c_d",  "c_r",     "c_s"};
  if (!j.is_object()) throw DomainError("criterion must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) throw DomainError("unknown criterion field '" + key + "'");
  }
  read(j, "id", c.id);
  read(j, "name", c.name);
  read(j, "kind", c.kind);
  read(j, "p", c.p);
  read(j, "eps", c.eps);
  read(j, "delta", c.delta);
  read(j, "n", c.n);
  read(j, "m", c.m);
  read(j, "mode", c.mode);
  read(j, "workloads", c.workloads);
  read(j, "trials", c.trials);
  read(j, "cadence", c.cadence);
  read(j, "trace_every", c.trace_every);
  read(j, "lambdas", c.lambdas);
  read(j, "samples", c.samples);
  read(j, "tolerance", c.tolerance);
  read(j, "c_d", c.c_d);
  read(j, "c_r", c.c_r);
  read(j, "c_s", c.c_s);
}

void validate_criterion(const CriterionSpec& c) {
  const std::string where = "criterion " + std::to_string(c.id) + " (" + c.kind + "): ";
  if (std::find(kKinds.begin(), kKinds.end(), c.kind) == kKinds.end()) {
    throw DomainError("criterion " + std::to_string(c.id) + ": unknown kind '" + c.kind + "'");
  }
  for (const std::string& w : c.workloads) parse_workload(w);
  parse_mode(c.mode);
  const bool uses_trials = c.kind != "distribution" && c.kind != "space_accounting";
  if (uses_trials && c.trials == 0) throw DomainError(where + "trials must be positive");
  if ((c.kind == "tracking") && c.trials < 30) throw DomainError(where + "tracking needs at least 30 trials");
  if (c.n < 1 || c.m < 1) throw DomainError(where + "n and m must be positive");
  if (c.cadence < 1) throw DomainError(where + "cadence must be positive");
  for (double p : c.p) {
    if (!(p >= kMinStableIndex && p <= 2.0)) throw DomainError(where + "p must lie in [0.1, 2]");
  }
  // The epoch construction is defined for any eps < 1; sketches need eps < 1/2.
  const double eps_limit = c.kind == "epoch_bound" ? 1.0 : 0.5;
  for (double e : c.eps) {
    if (!(e > 0.0 && e < eps_limit)) throw DomainError(where + "eps must lie in (0, " + fmt(eps_limit) + ")");
  }
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw DomainError(where + "delta must lie in (0, 1)");
  const bool needs_p = c.kind != "paley_zygmund";
  if (needs_p && c.p.empty()) throw DomainError(where + "needs at least one p");
  const bool needs_eps = c.kind != "distribution" && c.kind != "paley_zygmund";
  if (needs_eps && c.eps.empty()) throw DomainError(where + "needs at least one eps");
  const bool needs_workloads = c.kind == "tracking" || c.kind == "single_query" || c.kind == "epoch_bound" ||
                               c.kind == "derandomization";
  if (needs_workloads && c.workloads.empty()) throw DomainError(where + "needs at least one workload");
  if ((c.kind == "sup_tail" || c.kind == "sos_tail") && c.lambdas.size() < 2) {
    throw DomainError(where + "needs at least two lambdas");
  }
  if (c.kind == "distribution" && c.samples == 0) throw DomainError(where + "samples must be positive");
  if (c.kind == "space_accounting") {
    for (std::size_t k = 1; k < c.eps.size(); ++k) {
      if (!(c.eps[k] < c.eps[k - 1])) throw DomainError(where + "eps must decrease");
    }
  }
}

}  // namespace

void to_json(json& j, const CriterionSpec& c) {
  j = json{{"id", c.id},           {"name", c.name},         {"kind", c.kind},      {"p", c.p},
           {"eps", c.eps},         {"delta", c.delta},       {"n", c.n},            {"m", c.m},
           {"mode", c.mode},       {"workloads", c.workloads}, {"trials", c.trials}, {"cadence", c.cadence},
           {"trace_every", c.trace_every}, {"lambdas", c.lambdas}, {"samples", c.samples},
           {"tolerance", c.tolerance},     {"c_d", c.c_d},         {"c_r", c.c_r},          {"c_s", c.c_s}};
}

void to_json(json& j, const ExperimentSpec& s) {
  j = json{{"name", s.name}, {"master_seed", s.master_seed}, {"criteria", s.criteria}};
}

void validate(const ExperimentSpec& spec) {
  parse_seed_hex(spec.master_seed);
  if (spec.criteria.empty()) throw DomainError("experiment lists no criteria");
  for (const CriterionSpec& c : spec.criteria) validate_criterion(c);
}

ExperimentSpec parse_experiment(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("experiment spec is not valid JSON: ") + e.what());
  }
  ExperimentSpec spec;
  try {
    if (!j.is_object()) throw DomainError("experiment spec must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key != "name" && key != "master_seed" && key != "criteria") {
        throw DomainError("unknown experiment field '" + key + "'");
      }
    }
    read(j, "name", spec.name);
    read(j, "master_seed", spec.master_seed);
    if (j.contains("criteria")) {
      for (const json& c : j.at("criteria")) {
        CriterionSpec parsed;
        from_json(c, parsed);
        spec.criteria.push_back(std::move(parsed));
      }
    }
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed experiment spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open experiment spec " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment(text.str());
}

ExperimentSpec acceptance_suite() {
  const std::vector<double> all_p = {0.5, 1.0, 1.5, 2.0};
  ExperimentSpec s;
  s.name = "acceptance";
  s.master_seed = "00000000000000000000000000000000000000000000000000000000000a11ce";

  CriterionSpec weak;
  weak.id = 1;
  weak.name = "weak tracking rate";
  weak.kind = "tracking";
  weak.p = all_p;
  weak.eps = {0.25};
  weak.delta = 0.1;
  weak.n = 1000;
  weak.m = 100000;
  weak.mode = "weak";
  weak.workloads = {"zipf", "late_burst"};
  weak.trials = 200;
  weak.trace_every = 1000;
  s.criteria.push_back(weak);

  CriterionSpec strong = weak;
  strong.id = 2;
  strong.name = "strong tracking rate";
  strong.mode = "strong";
  s.criteria.push_back(strong);

  CriterionSpec single;
  single.id = 3;
  single.name = "single-query accuracy";
  single.kind = "single_query";
  single.p = all_p;
  single.eps = {0.25};
  single.workloads = {"zipf"};
  single.trials = 500;
  s.criteria.push_back(single);

  CriterionSpec epochs;
  epochs.id = 4;
  epochs.name = "epoch bound";
  epochs.kind = "epoch_bound";
  epochs.p = all_p;
  epochs.eps = {0.1, 0.25, 0.5};
  epochs.workloads = {"uniform", "zipf", "single_item"};
  epochs.n = 64;
  epochs.m = 1000;
  epochs.trials = 1000;
  s.criteria.push_back(epochs);

  CriterionSpec dist;
  dist.id = 5;
  dist.name = "distributional fidelity";
  dist.kind = "distribution";
  dist.p = {0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  dist.samples = 1000000;
  dist.tolerance = 0.005;
  s.criteria.push_back(dist);

  CriterionSpec sup;
  sup.id = 6;
  sup.name = "tail-exponent fits";
  sup.kind = "sup_tail";
  sup.p = {1.0, 2.0};
  sup.eps = {0.25};
  sup.n = 256;
  sup.m = 4096;
  sup.lambdas = {1.0, 2.0, 4.0, 8.0, 16.0};
  sup.trials = 100000;
  sup.tolerance = 0.3;
  s.criteria.push_back(sup);

  CriterionSpec sos = sup;
  sos.kind = "sos_tail";
  sos.lambdas = {2.0, 4.0, 8.0, 16.0};
  s.criteria.push_back(sos);

  CriterionSpec pz;
  pz.id = 7;
  pz.name = "Paley-Zygmund corollary";
  pz.kind = "paley_zygmund";
  pz.n = 256;
  pz.m = 4096;
  pz.trials = 100000;
  pz.tolerance = 0.01;
  s.criteria.push_back(pz);

  CriterionSpec exact;
  exact.id = 8;
  exact.name = "exact-structure suite";
  exact.kind = "exact_structure";
  exact.p = all_p;
  exact.eps = {0.25};
  exact.n = 1000;
  exact.m = 20000;
  exact.trials = 8;
  s.criteria.push_back(exact);

  CriterionSpec derand;
  derand.id = 9;
  derand.name = "derandomization closeness";
  derand.kind = "derandomization";
  derand.p = all_p;
  derand.eps = {0.25};
  derand.n = 256;
  derand.m = 4096;
  derand.workloads = {"zipf"};
  derand.trials = 500;
  derand.tolerance = 0.1;
  s.criteria.push_back(derand);

  CriterionSpec space;
  space.id = 10;
  space.name = "space accounting";
  space.kind = "space_accounting";
  space.p = all_p;
  space.eps = {0.25, 0.125, 0.0625};
  space.tolerance = 0.1;
  s.criteria.push_back(space);
  return s;
}

CriterionResult run_criterion(const CriterionSpec& criterion, const std::string& master_seed, unsigned threads) {
  validate_criterion(criterion);
  const MasterSeed root = criterion_root(criterion, master_seed);
  CriterionResult out;
  const std::string& k = criterion.kind;
  if (k == "tracking") out = run_tracking(criterion, root, threads);
  else if (k == "single_query") out = run_single_query(criterion, root, threads);
  else if (k == "epoch_bound") out = run_epoch_bound(criterion, root, threads);
  else if (k == "distribution") out = run_distribution(criterion, root, threads);
  else if (k == "sup_tail" || k == "sos_tail") out = run_tail(criterion, root, threads);
  else if (k == "paley_zygmund") out = run_paley_zygmund(criterion, root, threads);
  else if (k == "exact_structure") out = run_exact_structure(criterion, root, threads);
  else if (k == "derandomization") out = run_derandomization(criterion, root, threads);
  else out = run_space_accounting(criterion, root, threads);
  out.id = criterion.id;
  out.name = criterion.name;
  out.kind = criterion.kind;
  return out;
}

std::vector<std::pair<int, bool>> ExperimentResult::verdicts() const {
  std::vector<std::pair<int, bool>> out;
  for (const CriterionResult& e : entries) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& v) { return v.first == e.id; });
    if (it == out.end()) {
      out.emplace_back(e.id, e.pass);
    } else {
      it->second = it->second && e.pass;
    }
  }
  return out;
}

bool ExperimentResult::all_pass() const {
  const auto v = verdicts();
  return std::all_of(v.begin(), v.end(), [](const auto& x) { return x.second; });
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const ExperimentOptions& options) {
  validate(spec);
  ExperimentResult result;
  result.name = spec.name;
  for (const CriterionSpec& c : spec.criteria) {
    result.entries.push_back(run_criterion(c, spec.master_seed, options.threads));
    if (options.progress) {
      const CriterionResult& e = result.entries.back();
      *options.progress << (e.pass ? "pass " : "FAIL ") << e.id << " " << e.kind << ": " << e.detail << std::endl;
    }
  }
  return result;
}

}  // namespace lptrack

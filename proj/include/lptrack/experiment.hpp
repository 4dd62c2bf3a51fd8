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

// Experiment specs, the criteria runners and report files.
//
// A spec is a JSON document:
//
//   {"name": "...", "master_seed": "<hex>", "criteria": [{"id": 1, "kind": "tracking", ...}, ...]}
//
// Several entries may share an id; the id passes when all of them do.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "lptrack/sketch.hpp"

namespace lptrack {

// Every field is used by some kinds and ignored by the others:
//
//   tracking           p, eps[0], delta, n, m, mode, workloads, trials, cadence, trace_every
//   single_query       p, eps[0], delta, n, m, workloads, trials
//   epoch_bound        p x eps x workloads grid, n, m, trials (= number of streams)
//   distribution       p, samples, tolerance (KS and mass slack)
//   sup_tail, sos_tail p, eps[0] (fixes s), n, m, lambdas, trials, tolerance (slope slack)
//   paley_zygmund      n, m, trials, tolerance (slack under 1/27)
//   exact_structure    p, eps[0], delta, n, m, trials (random split points)
//   derandomization    p, eps[0], delta, n, m, workloads, trials, tolerance (KS bound)
//   space_accounting   p, eps (successive halvings), delta, n, m, tolerance (relative band)
struct CriterionSpec {
  int id = 0;
  std::string name;
  std::string kind;
  std::vector<double> p;
  std::vector<double> eps;
  double delta = 0.1;
  std::uint64_t n = 1000;
  std::uint64_t m = 100000;
  std::string mode = "weak";
  std::vector<std::string> workloads;
  std::uint64_t trials = 0;
  std::uint64_t cadence = 1;
  std::uint64_t trace_every = 0;  // tracking only; 0 writes no trace
  std::vector<double> lambdas;
  std::uint64_t samples = 0;
  double tolerance = 0.0;
  // Planner constants for every sketch the entry builds.
  double c_d = PlannerConstants{}.c_d;
  double c_r = PlannerConstants{}.c_r;
  double c_s = PlannerConstants{}.c_s;

  friend bool operator==(const CriterionSpec&, const CriterionSpec&) = default;
};

struct ExperimentSpec {
  std::string name;
  std::string master_seed;
  std::vector<CriterionSpec> criteria;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

void to_json(nlohmann::json& j, const CriterionSpec& c);
void to_json(nlohmann::json& j, const ExperimentSpec& s);

// Throws DomainError for unknown keys or kinds, unknown workload names (the
// message names them), zero trials and out-of-range parameters;
// FormatError for malformed JSON.
ExperimentSpec parse_experiment(const std::string& text);
ExperimentSpec load_experiment(const std::filesystem::path& path);
void validate(const ExperimentSpec& spec);

// The acceptance suite, with every tolerance pinned. The shipped
// acceptance.spec is this value serialized.
ExperimentSpec acceptance_suite();

struct CriterionResult {
  int id = 0;
  std::string name;
  std::string kind;
  bool pass = false;
  std::string detail;                    // one-line human summary
  nlohmann::json metrics;                // rates, intervals, fits
  std::vector<nlohmann::json> records;   // JSONL rows, one per (trial, checkpoint)
  std::vector<std::string> trace_rows;   // CSV rows of per-time traces
};

struct ExperimentResult {
  std::string name;
  std::vector<CriterionResult> entries;

  // Ids in first-seen order with the conjunction of their entries.
  std::vector<std::pair<int, bool>> verdicts() const;
  bool all_pass() const;
};

struct ExperimentOptions {
  unsigned threads = 0;
  std::ostream* progress = nullptr;  // one line per finished entry
};

ExperimentResult run_experiment(const ExperimentSpec& spec, const ExperimentOptions& options = {});
CriterionResult run_criterion(const CriterionSpec& criterion, const std::string& master_seed, unsigned threads);

// summary.json, records.jsonl and traces.csv under dir.
void write_reports(const ExperimentResult& result, const std::filesystem::path& dir);
nlohmann::json summary_json(const ExperimentResult& result);

}  // namespace lptrack

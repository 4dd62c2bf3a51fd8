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

// Runs the acceptance suite and prints one PASS/FAIL line per criterion.
// Every parameter and tolerance lives in acceptance_suite().

#include <chrono>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "lptrack/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"lptrack acceptance suite"};
  std::vector<int> only;
  std::string out_dir;
  unsigned threads = 0;
  std::vector<int> known_fail;
  bool dump_spec = false;
  app.add_option("--only", only, "Run just these criterion ids");
  app.add_option("--out", out_dir, "Write summary.json, records.jsonl and traces.csv here");
  app.add_option("--threads", threads, "Worker threads (0: all cores)");
  app.add_option("--known-fail", known_fail, "Criterion ids whose FAIL does not change the exit code");
  app.add_flag("--dump-spec", dump_spec, "Print the suite as an experiment spec and exit");
  CLI11_PARSE(app, argc, argv);

  lptrack::ExperimentSpec spec = lptrack::acceptance_suite();
  if (dump_spec) {
    std::cout << nlohmann::json(spec).dump(2) << std::endl;
    return 0;
  }
  if (!only.empty()) {
    const std::set<int> keep(only.begin(), only.end());
    std::erase_if(spec.criteria, [&](const lptrack::CriterionSpec& c) { return !keep.count(c.id); });
  }

  lptrack::ExperimentResult result;
  result.name = spec.name;
  for (const lptrack::CriterionSpec& c : spec.criteria) {
    const auto start = std::chrono::steady_clock::now();
    result.entries.push_back(lptrack::run_criterion(c, spec.master_seed, threads));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto& e = result.entries.back();
    std::cerr << "  [" << e.id << " " << e.kind << "] " << (e.pass ? "ok" : "not met") << " in " << secs << " s: "
              << e.detail << std::endl;
  }
  if (!out_dir.empty()) lptrack::write_reports(result, out_dir);

  for (const auto& [id, pass] : result.verdicts()) {
    std::string name;
    std::string detail;
    for (const auto& e : result.entries) {
      if (e.id != id) continue;
      name = e.name;
      if (!detail.empty()) detail += "; ";
      detail += e.detail;
    }
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << detail << std::endl;
  }
  const std::set<int> tolerated(known_fail.begin(), known_fail.end());
  int unexpected = 0;
  for (const auto& [id, pass] : result.verdicts()) {
    if (pass) continue;
    if (tolerated.count(id)) {
      std::cout << "note: criterion " << id << " is a known failure" << std::endl;
    } else {
      ++unexpected;
    }
  }
  return unexpected == 0 ? 0 : 1;
}

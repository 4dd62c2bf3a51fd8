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

// Report files of an experiment run.

#include <fstream>

#include "lptrack/error.hpp"
#include "lptrack/experiment.hpp"

namespace lptrack {
namespace {

std::ofstream open_report(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DomainError("cannot write " + path.string());
  return out;
}

}  // namespace

nlohmann::json summary_json(const ExperimentResult& result) {
  nlohmann::json entries = nlohmann::json::array();
  for (const CriterionResult& e : result.entries) {
    entries.push_back({{"id", e.id},
                       {"name", e.name},
                       {"kind", e.kind},
                       {"verdict", e.pass ? "PASS" : "FAIL"},
                       {"detail", e.detail},
                       {"metrics", e.metrics}});
  }
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& [id, pass] : result.verdicts()) verdicts.push_back({{"id", id}, {"verdict", pass ? "PASS" : "FAIL"}});
  return {{"experiment", result.name}, {"criteria", verdicts}, {"entries", entries}, {"all_pass", result.all_pass()}};
}

void write_reports(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_report(dir / "summary.json");
    out << summary_json(result).dump(2) << '\n';
  }
  {
    auto out = open_report(dir / "records.jsonl");
    for (const CriterionResult& e : result.entries) {
      for (const nlohmann::json& row : e.records) out << row.dump() << '\n';
    }
  }
  {
    auto out = open_report(dir / "traces.csv");
    out << "criterion,p,workload,t,estimate,exact,abs_error,rel_error\n";
    for (const CriterionResult& e : result.entries) {
      for (const std::string& row : e.trace_rows) out << row << '\n';
    }
  }
}

}  // namespace lptrack

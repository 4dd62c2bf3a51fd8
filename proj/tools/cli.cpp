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

#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include "CLI11.hpp"
#include "json.hpp"
#include "lptrack/error.hpp"
#include "lptrack/experiment.hpp"
#include "lptrack/sketch.hpp"
#include "lptrack/workload.hpp"

namespace lptrack::cli {
namespace {

struct TrackFlags {
  double p = 1.0;
  double eps = 0.25;
  double delta = 0.1;
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::string mode = "weak";
  std::string seed;
  std::string input = "-";
  std::string format = "text";
  std::string workload = "zipf";
  std::string workload_seed;
  std::uint64_t emit_every = 1;
  std::string checkpoint;
  std::string cache = "rows";
  bool hash_tokens = false;
};

MasterSeed resolve_seed(const std::string& flag, std::ostream& err) {
  if (!flag.empty()) return parse_seed_hex(flag);
  if (const char* env = std::getenv("LPTRACK_SEED"); env != nullptr && *env != '\0') return parse_seed_hex(env);
  std::random_device rd;
  MasterSeed seed;
  for (auto& b : seed) b = static_cast<std::uint8_t>(rd());
  err << "lptrack: no --seed given, using generated seed " << seed_to_hex(seed) << '\n';
  return seed;
}

EntryCache parse_cache(const std::string& name) {
  if (name == "none") return EntryCache::kNone;
  if (name == "rows") return EntryCache::kRowSeeds;
  if (name == "items") return EntryCache::kItems;
  throw DomainError("--cache must be none, rows or items");
}

// Pulls item ids from the input and hands them to sink(item, weight).
template <typename Sink>
void read_text(std::istream& in, std::uint64_t n, bool hash_tokens, Sink&& sink) {
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    const std::string_view token(line.data() + first, last - first + 1);
    std::uint64_t item = 0;
    if (hash_tokens) {
      item = token_hash(token) % n;
    } else {
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), item);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw DomainError("line " + std::to_string(line_no) + ": '" + std::string(token) +
                          "' is not a nonnegative integer item id");
      }
      if (item >= n) {
        throw DomainError("line " + std::to_string(line_no) + ": item " + std::to_string(item) + " outside [0, " +
                          std::to_string(n) + ")");
      }
    }
    sink(item, 1);
  }
}

template <typename Sink>
void read_binary(std::istream& in, std::uint64_t n, Sink&& sink) {
  std::uint64_t offset = 0;
  unsigned char buf[4];
  while (true) {
    in.read(reinterpret_cast<char*>(buf), 4);
    const std::streamsize got = in.gcount();
    if (got == 0) break;
    if (got != 4) throw DomainError("offset " + std::to_string(offset) + ": truncated u32 item id");
    const std::uint64_t item = std::uint64_t{buf[0]} | std::uint64_t{buf[1]} << 8 | std::uint64_t{buf[2]} << 16 |
                               std::uint64_t{buf[3]} << 24;
    if (item >= n) {
      throw DomainError("offset " + std::to_string(offset) + ": item " + std::to_string(item) + " outside [0, " +
                        std::to_string(n) + ")");
    }
    sink(item, 1);
    offset += 4;
  }
}

void emit(std::ostream& out, std::uint64_t t, double estimate) {
  out << nlohmann::json{{"t", t}, {"estimate", estimate}}.dump() << '\n';
}

int cmd_track(const TrackFlags& f, std::istream& in, std::ostream& out, std::ostream& err) {
  if (f.emit_every == 0) throw DomainError("--emit-every must be positive");
  const SketchConfig config = plan_config(f.p, f.eps, f.delta, f.n, f.m, parse_mode(f.mode));
  const MasterSeed seed = resolve_seed(f.seed, err);
  PStableSketch sketch(config, seed, parse_cache(f.cache));

  std::uint64_t updates = 0;
  std::uint64_t last_emit = 0;
  bool emitted = false;
  auto sink = [&](std::uint64_t item, std::uint64_t weight) {
    sketch.update(item, weight);
    ++updates;
    if (updates % f.emit_every == 0) {
      emit(out, sketch.t(), sketch.estimate());
      last_emit = updates;
      emitted = true;
    }
  };

  if (f.format == "generator") {
    const MasterSeed wseed = f.workload_seed.empty() ? derive_seed(seed, 0) : parse_seed_hex(f.workload_seed);
    for (const Update& u : make_workload(parse_workload(f.workload), f.n, f.m, wseed)) sink(u.item, u.weight);
  } else if (f.format == "text" || f.format == "binary") {
    std::ifstream file;
    std::istream* src = &in;
    if (f.input != "-") {
      file.open(f.input, std::ios::binary);
      if (!file) throw DomainError("cannot open input " + f.input);
      src = &file;
    }
    if (f.format == "text") {
      read_text(*src, f.n, f.hash_tokens, sink);
    } else {
      read_binary(*src, f.n, sink);
    }
  } else {
    throw DomainError("--format must be text, binary or generator");
  }
  if (!emitted || last_emit != updates) emit(out, sketch.t(), sketch.estimate());

  if (!f.checkpoint.empty()) {
    const std::vector<std::uint8_t> bytes = sketch.serialize();
    std::ofstream file(f.checkpoint, std::ios::binary | std::ios::trunc);
    file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!file) throw DomainError("cannot write checkpoint " + f.checkpoint);
  }
  return kExitOk;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DomainError("cannot open checkpoint " + path);
  return {std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};
}

int cmd_merge(const std::vector<std::string>& inputs, const std::string& output) {
  std::optional<PStableSketch> merged;
  for (const std::string& path : inputs) {
    PStableSketch next = PStableSketch::deserialize(read_file(path));
    if (!merged) {
      merged.emplace(std::move(next));
    } else {
      merged->merge_from(next);
    }
  }
  const std::vector<std::uint8_t> bytes = merged->serialize();
  std::ofstream file(output, std::ios::binary | std::ios::trunc);
  file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw DomainError("cannot write " + output);
  return kExitOk;
}

int cmd_experiment(const std::string& spec_path, const std::string& out_dir, unsigned threads, std::ostream& out,
                   std::ostream& err) {
  const ExperimentSpec spec = load_experiment(spec_path);
  ExperimentOptions options;
  options.threads = threads;
  options.progress = &err;
  const ExperimentResult result = run_experiment(spec, options);
  if (!out_dir.empty()) write_reports(result, out_dir);
  for (const auto& [id, pass] : result.verdicts()) {
    std::string detail;
    for (const CriterionResult& e : result.entries) {
      if (e.id != id) continue;
      if (!detail.empty()) detail += "; ";
      detail += e.detail;
    }
    out << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << '\n';
  }
  return result.all_pass() ? kExitOk : kExitFail;
}

}  // namespace

std::uint64_t token_hash(std::string_view token) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous l_p norm tracking with p-stable sketches"};
  app.require_subcommand(1);

  TrackFlags track;
  CLI::App* t = app.add_subcommand("track", "Sketch a stream and emit (t, estimate) records as JSON lines");
  t->add_option("--p", track.p, "Norm index in (0, 2]")->required();
  t->add_option("--eps", track.eps, "Accuracy in (0, 1/2)")->required();
  t->add_option("--delta", track.delta, "Failure probability in (0, 1)")->required();
  t->add_option("--n", track.n, "Domain size; items are ids in [0, n)")->required();
  t->add_option("--m", track.m, "Bound on the stream length")->required();
  t->add_option("--mode", track.mode, "weak or strong");
  t->add_option("--seed", track.seed, "Master seed, up to 64 hex digits (else $LPTRACK_SEED)");
  t->add_option("--input", track.input, "Input path, - for stdin");
  t->add_option("--format", track.format, "text, binary (u32 little-endian) or generator");
  t->add_option("--workload", track.workload, "Generator workload: uniform, zipf, single_item, late_burst");
  t->add_option("--workload-seed", track.workload_seed, "Generator seed (default derived from --seed)");
  t->add_option("--emit-every", track.emit_every, "Emit a record every K updates and at the end");
  t->add_option("--checkpoint", track.checkpoint, "Write the final sketch here");
  t->add_option("--cache", track.cache, "Entry cache: none, rows or items (values are identical)");
  t->add_flag("--hash-tokens", track.hash_tokens, "Map arbitrary text tokens into [0, n) by FNV-1a 64");

  std::vector<std::string> merge_inputs;
  std::string merge_out;
  CLI::App* mg = app.add_subcommand("merge", "Merge checkpoints that share config and seed");
  mg->add_option("inputs", merge_inputs, "Checkpoint files")->required();
  mg->add_option("--out", merge_out, "Output checkpoint")->required();

  std::string spec_path;
  std::string out_dir;
  unsigned threads = 0;
  CLI::App* ex = app.add_subcommand("experiment", "Run an experiment spec; exit 1 if a criterion fails");
  ex->add_option("spec", spec_path, "JSON experiment spec")->required();
  ex->add_option("--out", out_dir, "Directory for summary.json, records.jsonl, traces.csv");
  ex->add_option("--threads", threads, "Worker threads (0: all cores)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (t->parsed()) return cmd_track(track, in, out, err);
    if (mg->parsed()) return cmd_merge(merge_inputs, merge_out);
    return cmd_experiment(spec_path, out_dir, threads, out, err);
  } catch (const OverflowError& e) {
    err << "lptrack: " << e.what() << '\n';
    return kExitCapacity;
  } catch (const StreamLengthError& e) {
    err << "lptrack: " << e.what() << '\n';
    return kExitCapacity;
  } catch (const std::exception& e) {
    err << "lptrack: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace lptrack::cli

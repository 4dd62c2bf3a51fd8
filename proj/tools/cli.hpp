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

// The lptrack command line, callable in-process for tests.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace lptrack::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;      // an experiment criterion failed
inline constexpr int kExitUsage = 2;     // flag, domain, format or mismatch errors
inline constexpr int kExitCapacity = 3;  // counter overflow or stream longer than m

// FNV-1a 64 of a token; --hash-tokens maps a token to this value mod n.
std::uint64_t token_hash(std::string_view token);

// args excludes the program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace lptrack::cli

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

#pragma once

#include <stdexcept>
#include <string>

namespace lptrack {

// Argument outside the mathematical domain of an operation (bad p, item >= n,
// malformed seed, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A fixed-point counter would leave its 64-bit range.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// More stream mass than the configured bound m.
class StreamLengthError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Sketches or checkpoints that do not share config and seed.
class MismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Corrupt, truncated or wrong-version binary data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric construction failed (quadrature or monotonicity checks).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lptrack

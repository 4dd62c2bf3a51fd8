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

// Pseudo-randomness for the sketch matrix.
//
// A 256-bit master seed fixes r * s field elements: for each of the s
// coefficient slots there is one degree-(r-1) polynomial over F_P. Row i's
// seed is the vector of those s polynomials evaluated at i, which makes the
// row seeds r-wise independent. A row seed is itself the coefficient list of
// a degree-(s-1) polynomial over F_P, evaluated at column j to give s-wise
// independent field elements; their top tau bits select a cell of the p-stable
// quantile function, which is rounded to a multiple of gamma.

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lptrack/field.hpp"
#include "lptrack/stable.hpp"

namespace lptrack {

using MasterSeed = std::array<std::uint8_t, 32>;

// Accepts 1 to 64 hex digits (optional 0x prefix), left-padded with zeros;
// the first byte of the seed is the first pair of the padded string.
MasterSeed parse_seed_hex(std::string_view hex);
std::string seed_to_hex(const MasterSeed& seed);
// Independent child seed H(master, index), used for per-trial seeding.
MasterSeed derive_seed(const MasterSeed& master, std::uint64_t index);

// Deterministic stream of 64-bit words keyed by (seed, tag).
class SeedStream {
 public:
  SeedStream(const MasterSeed& seed, std::uint64_t tag);
  std::uint64_t next();
  // Uniform in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound);
  // Uniform in (0, 1), never 0 or 1.
  double unit();

 private:
  std::array<std::uint64_t, 4> words_;
  std::uint64_t tag_;
  std::uint64_t counter_ = 0;
};

// Degree-(k-1) polynomial over F_P, coefficients highest degree first.
class KWiseHash {
 public:
  KWiseHash(PrimeField field, std::vector<std::uint64_t> coefficients);
  static KWiseHash random(PrimeField field, std::uint32_t k, SeedStream& stream);

  std::uint32_t k() const { return static_cast<std::uint32_t>(coefficients_.size()); }
  const PrimeField& field() const { return field_; }
  std::span<const std::uint64_t> coefficients() const { return coefficients_; }

  // Horner's rule mod P. Throws DomainError if x >= P.
  std::uint64_t operator()(std::uint64_t x) const;

 private:
  PrimeField field_;
  std::vector<std::uint64_t> coefficients_;
};

// 4-wise independent random signs: +1 iff the hash lands in the lower half of F_P.
class SignHash {
 public:
  SignHash(PrimeField field, SeedStream& stream) : hash_(KWiseHash::random(field, 4, stream)) {}
  int operator()(std::uint64_t x) const { return hash_(x) < (hash_.field().prime() + 1) / 2 ? 1 : -1; }

 private:
  KWiseHash hash_;
};

struct HierarchyShape {
  std::uint64_t rows = 1;         // d
  std::uint32_t row_wise = 2;     // r
  std::uint32_t column_wise = 2;  // s
  std::uint32_t tau = 16;         // bits per variate
  std::uint64_t field_prime = 0;  // prime with rows <= P and 2^tau <= P
};

// Smallest prime >= 2 * max(n, 2^tau).
std::uint64_t sketch_field_prime(std::uint64_t n, std::uint32_t tau);

class SeedHierarchy {
 public:
  SeedHierarchy(const MasterSeed& seed, const HierarchyShape& shape);

  const MasterSeed& master_seed() const { return seed_; }
  const HierarchyShape& shape() const { return shape_; }
  const PrimeField& field() const { return field_; }

  // s field elements: the coefficients of row i's column polynomial.
  // Throws DomainError if i >= d.
  std::vector<std::uint64_t> row_seed(std::uint64_t i) const;
  // The same block as a bit string: s elements of ceil(log2 P) bits, packed
  // little-endian and rounded up to whole bytes.
  std::vector<std::uint8_t> row_seed_bits(std::uint64_t i) const;
  // Top tau bits of the row polynomial at column j. Throws DomainError if j >= P.
  std::uint64_t column_bits(std::span<const std::uint64_t> row_seed, std::uint64_t j) const;

  // column_bits for every row seed in a flat rows x s block, interleaved so
  // independent Horner chains overlap. Same values as the scalar form.
  void column_bits_rows(std::span<const std::uint64_t> row_seeds, std::uint64_t j,
                        std::span<std::uint64_t> out) const;

  // Bits needed to store the hierarchy's randomness: r * s * ceil(log2 P).
  std::uint64_t seed_bits() const;

 private:
  MasterSeed seed_;
  HierarchyShape shape_;
  PrimeField field_;
  std::vector<KWiseHash> slots_;  // s polynomials of degree r - 1
};

// u = (bits + 1/2) / 2^tau.
double bits_to_uniform(std::uint64_t bits, std::uint32_t tau);

// Quantile of the cell, clamped to +-Q(1 - 2^-tau), rounded to the nearest
// multiple of gamma and returned in gamma quanta, clamped to +-max_quanta.
std::int64_t discretize(const StableLaw& law, std::uint64_t bits, std::uint32_t tau, double gamma,
                        std::int64_t max_quanta);

// Entries of the discretized sketch matrix.
class EntryGenerator {
 public:
  EntryGenerator(SeedHierarchy seeds, std::shared_ptr<const StableLaw> law, std::uint64_t columns,
                 double gamma, std::int64_t max_quanta);

  const SeedHierarchy& seeds() const { return seeds_; }
  const StableLaw& law() const { return *law_; }
  double gamma() const { return gamma_; }
  std::int64_t max_quanta() const { return max_quanta_; }
  std::uint64_t columns() const { return columns_; }

  // Entry (i, j) in gamma quanta. Throws DomainError for i >= d or j >= n.
  std::int64_t entry(std::uint64_t i, std::uint64_t j) const;
  // Same, for a row seed computed earlier.
  std::int64_t entry_from_seed(std::span<const std::uint64_t> row_seed, std::uint64_t j) const;
  // Column j for every row seed of a flat rows x s block.
  void column_from_seeds(std::span<const std::uint64_t> row_seeds, std::uint64_t j, std::span<std::int64_t> out) const;

 private:
  SeedHierarchy seeds_;
  std::shared_ptr<const StableLaw> law_;
  std::uint64_t columns_;
  double gamma_;
  std::int64_t max_quanta_;
  double clamp_value_;
};

}  // namespace lptrack

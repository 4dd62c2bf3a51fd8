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

#include "lptrack/prf.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "lptrack/error.hpp"

namespace lptrack {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kRowSlotTag = 0x726f772d736c6f74ULL;  // "row-slot"
constexpr std::uint64_t kDeriveTag = 0x6465726976652d69ULL;   // "derive-i"

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

MasterSeed parse_seed_hex(std::string_view hex) {
  if (hex.size() >= 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X')) hex.remove_prefix(2);
  if (hex.empty() || hex.size() > 64) throw DomainError("seed must be 1 to 64 hex digits");
  std::string padded(64 - hex.size(), '0');
  padded.append(hex);
  MasterSeed seed{};
  for (std::size_t i = 0; i < 32; ++i) {
    const int hi = hex_value(padded[2 * i]);
    const int lo = hex_value(padded[2 * i + 1]);
    if (hi < 0 || lo < 0) throw DomainError("seed contains a non-hex character");
    seed[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return seed;
}

std::string seed_to_hex(const MasterSeed& seed) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (std::uint8_t b : seed) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

MasterSeed derive_seed(const MasterSeed& master, std::uint64_t index) {
  SeedStream stream(master, kDeriveTag ^ mix64(index + kGolden));
  MasterSeed child{};
  for (std::size_t w = 0; w < 4; ++w) {
    const std::uint64_t v = stream.next();
    for (std::size_t b = 0; b < 8; ++b) child[8 * w + b] = static_cast<std::uint8_t>(v >> (8 * b));
  }
  return child;
}

SeedStream::SeedStream(const MasterSeed& seed, std::uint64_t tag) : tag_(tag) {
  for (std::size_t w = 0; w < 4; ++w) {
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < 8; ++b) v |= std::uint64_t{seed[8 * w + b]} << (8 * b);
    words_[w] = v;
  }
}

std::uint64_t SeedStream::next() {
  std::uint64_t h = mix64(counter_++ * kGolden + mix64(tag_));
  for (std::uint64_t w : words_) h = mix64(h ^ (w + kGolden));
  return h;
}

std::uint64_t SeedStream::below(std::uint64_t bound) {
  if (bound == 0) throw DomainError("empty sampling range");
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = next();
    if (x >= threshold) return x % bound;
  }
}

double SeedStream::unit() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

KWiseHash::KWiseHash(PrimeField field, std::vector<std::uint64_t> coefficients)
    : field_(field), coefficients_(std::move(coefficients)) {
  if (coefficients_.empty()) throw DomainError("k-wise hash needs at least one coefficient");
  for (std::uint64_t c : coefficients_) {
    if (c >= field_.prime()) throw DomainError("hash coefficient outside the field");
  }
}

KWiseHash KWiseHash::random(PrimeField field, std::uint32_t k, SeedStream& stream) {
  std::vector<std::uint64_t> coefficients(k);
  for (auto& c : coefficients) c = stream.below(field.prime());
  return KWiseHash(field, std::move(coefficients));
}

std::uint64_t KWiseHash::operator()(std::uint64_t x) const {
  if (x >= field_.prime()) throw DomainError("hash input outside the field");
  std::uint64_t acc = 0;
  for (std::uint64_t c : coefficients_) acc = field_.mul_add(acc, x, c);
  return acc;
}

std::uint64_t sketch_field_prime(std::uint64_t n, std::uint32_t tau) {
  if (tau < 1 || tau > 61) throw DomainError("tau must lie in [1, 61]");
  const std::uint64_t base = std::max<std::uint64_t>(n, std::uint64_t{1} << tau);
  if (base > (std::uint64_t{1} << 61)) throw DomainError("domain too large for a 63-bit field");
  return next_prime(2 * base);
}

SeedHierarchy::SeedHierarchy(const MasterSeed& seed, const HierarchyShape& shape)
    : seed_(seed), shape_(shape), field_(shape.field_prime) {
  if (shape.rows < 1 || shape.row_wise < 1 || shape.column_wise < 1) {
    throw DomainError("seed hierarchy needs d, r, s >= 1");
  }
  if (shape.tau < 1 || shape.tau > 61 || (std::uint64_t{1} << shape.tau) > field_.prime()) {
    throw DomainError("field too small for tau-bit variates");
  }
  if (shape.rows > field_.prime()) throw DomainError("field too small for the row domain");
  SeedStream stream(seed, kRowSlotTag);
  slots_.reserve(shape.column_wise);
  for (std::uint32_t k = 0; k < shape.column_wise; ++k) {
    slots_.push_back(KWiseHash::random(field_, shape.row_wise, stream));
  }
}

std::vector<std::uint64_t> SeedHierarchy::row_seed(std::uint64_t i) const {
  if (i >= shape_.rows) throw DomainError("row index out of range");
  std::vector<std::uint64_t> block(slots_.size());
  for (std::size_t k = 0; k < slots_.size(); ++k) block[k] = slots_[k](i);
  return block;
}

std::vector<std::uint8_t> SeedHierarchy::row_seed_bits(std::uint64_t i) const {
  const auto block = row_seed(i);
  const unsigned width = field_.element_bits();
  std::vector<std::uint8_t> out((block.size() * width + 7) / 8, 0);
  std::size_t bit = 0;
  for (std::uint64_t v : block) {
    for (unsigned b = 0; b < width; ++b, ++bit) {
      if ((v >> b) & 1) out[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
    }
  }
  return out;
}

std::uint64_t SeedHierarchy::column_bits(std::span<const std::uint64_t> row_seed, std::uint64_t j) const {
  if (j >= field_.prime()) throw DomainError("column index outside the field");
  std::uint64_t acc = 0;
  for (std::uint64_t c : row_seed) acc = field_.mul_add(acc, j, c);
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(acc) << shape_.tau) / field_.prime());
}

void SeedHierarchy::column_bits_rows(std::span<const std::uint64_t> row_seeds, std::uint64_t j,
                                     std::span<std::uint64_t> out) const {
  if (j >= field_.prime()) throw DomainError("column index outside the field");
  const std::size_t s = shape_.column_wise;
  if (row_seeds.size() != out.size() * s) throw DomainError("row seed block does not match the output size");
  const unsigned __int128 prime = field_.prime();
  const std::uint32_t tau = shape_.tau;
  constexpr std::size_t kLanes = 4;
  std::size_t row = 0;
  for (; row + kLanes <= out.size(); row += kLanes) {
    const std::uint64_t* c = row_seeds.data() + row * s;
    std::uint64_t a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    for (std::size_t k = 0; k < s; ++k) {
      a0 = field_.mul_add(a0, j, c[k]);
      a1 = field_.mul_add(a1, j, c[s + k]);
      a2 = field_.mul_add(a2, j, c[2 * s + k]);
      a3 = field_.mul_add(a3, j, c[3 * s + k]);
    }
    out[row] = static_cast<std::uint64_t>((static_cast<unsigned __int128>(a0) << tau) / prime);
    out[row + 1] = static_cast<std::uint64_t>((static_cast<unsigned __int128>(a1) << tau) / prime);
    out[row + 2] = static_cast<std::uint64_t>((static_cast<unsigned __int128>(a2) << tau) / prime);
    out[row + 3] = static_cast<std::uint64_t>((static_cast<unsigned __int128>(a3) << tau) / prime);
  }
  for (; row < out.size(); ++row) out[row] = column_bits(row_seeds.subspan(row * s, s), j);
}

std::uint64_t SeedHierarchy::seed_bits() const {
  std::uint64_t stored = 0;
  for (const KWiseHash& slot : slots_) stored += slot.k();
  return stored * field_.element_bits();
}

double bits_to_uniform(std::uint64_t bits, std::uint32_t tau) {
  return (static_cast<double>(bits) + 0.5) / std::exp2(static_cast<double>(tau));
}

namespace {

std::int64_t to_quanta(double value, double clamp_value, double gamma, std::int64_t max_quanta) {
  value = std::clamp(value, -clamp_value, clamp_value);
  const double q = value / gamma;
  const auto limit = static_cast<double>(max_quanta);
  if (q >= limit) return max_quanta;
  if (q <= -limit) return -max_quanta;
  return std::llround(q);
}

}  // namespace

std::int64_t discretize(const StableLaw& law, std::uint64_t bits, std::uint32_t tau, double gamma,
                        std::int64_t max_quanta) {
  if (!(gamma > 0.0) || max_quanta < 1) throw DomainError("discretization needs gamma > 0, max_quanta >= 1");
  if (tau < 1 || tau > 61 || bits >= (std::uint64_t{1} << tau)) throw DomainError("bit string wider than tau");
  const double clamp_value = law.upper_quantile(std::exp2(-static_cast<double>(tau)));
  return to_quanta(law.quantile(bits_to_uniform(bits, tau)), clamp_value, gamma, max_quanta);
}

EntryGenerator::EntryGenerator(SeedHierarchy seeds, std::shared_ptr<const StableLaw> law, std::uint64_t columns,
                               double gamma, std::int64_t max_quanta)
    : seeds_(std::move(seeds)), law_(std::move(law)), columns_(columns), gamma_(gamma), max_quanta_(max_quanta) {
  if (!law_) throw DomainError("entry generator needs a law");
  if (!(gamma > 0.0) || max_quanta < 1) throw DomainError("entry generator needs gamma > 0, max_quanta >= 1");
  if (columns < 1 || columns > seeds_.field().prime()) throw DomainError("field too small for the column domain");
  clamp_value_ = law_->upper_quantile(std::exp2(-static_cast<double>(seeds_.shape().tau)));
}

std::int64_t EntryGenerator::entry(std::uint64_t i, std::uint64_t j) const {
  if (j >= columns_) throw DomainError("column index out of range");
  return entry_from_seed(seeds_.row_seed(i), j);
}

std::int64_t EntryGenerator::entry_from_seed(std::span<const std::uint64_t> row_seed, std::uint64_t j) const {
  if (j >= columns_) throw DomainError("column index out of range");
  const std::uint32_t tau = seeds_.shape().tau;
  const double u = bits_to_uniform(seeds_.column_bits(row_seed, j), tau);
  return to_quanta(law_->quantile(u), clamp_value_, gamma_, max_quanta_);
}

void EntryGenerator::column_from_seeds(std::span<const std::uint64_t> row_seeds, std::uint64_t j,
                                       std::span<std::int64_t> out) const {
  if (j >= columns_) throw DomainError("column index out of range");
  thread_local std::vector<std::uint64_t> bits;
  bits.resize(out.size());
  seeds_.column_bits_rows(row_seeds, j, bits);
  const std::uint32_t tau = seeds_.shape().tau;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = to_quanta(law_->quantile(bits_to_uniform(bits[i], tau)), clamp_value_, gamma_, max_quanta_);
  }
}

}  // namespace lptrack

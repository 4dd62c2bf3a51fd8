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

// Arithmetic modulo a prime below 2^63.

#pragma once

#include <cstdint>

namespace lptrack {

// Deterministic Miller-Rabin for 64-bit inputs.
bool is_prime(std::uint64_t n);
// Smallest prime >= n. Throws DomainError if it would not fit below 2^63.
std::uint64_t next_prime(std::uint64_t n);

class PrimeField {
 public:
  // Throws DomainError unless prime is a prime in [2, 2^63).
  explicit PrimeField(std::uint64_t prime);

  std::uint64_t prime() const { return prime_; }
  // ceil(log2 prime): bits needed to store one element.
  unsigned element_bits() const { return bits_; }

  std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
    const std::uint64_t s = a + b;
    return s >= prime_ ? s - prime_ : s;
  }
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const { return mul_add(a, b, 0); }
  // a * b + c with a single reduction; all operands must be field elements.
  std::uint64_t mul_add(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    if (small_) {
      // Barrett reduction; a * b + c < 2^64 because prime < 2^32.
      const std::uint64_t x = a * b + c;
      const auto q = static_cast<std::uint64_t>((static_cast<unsigned __int128>(x) * barrett_) >> 64);
      std::uint64_t r = x - q * prime_;
      while (r >= prime_) r -= prime_;
      return r;
    }
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b + c) % prime_);
  }

  friend bool operator==(const PrimeField& a, const PrimeField& b) { return a.prime_ == b.prime_; }

 private:
  std::uint64_t prime_;
  std::uint64_t barrett_ = 0;
  unsigned bits_;
  bool small_;
};

}  // namespace lptrack

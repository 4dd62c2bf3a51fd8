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

// Normalized symmetric p-stable laws.
//
// Every law is scaled so that a variate Z satisfies P(|Z| > 1) = 1/2, i.e.
// the 75th percentile is exactly 1. For p = 1 (Cauchy) and p = 2 (Gaussian)
// closed forms are used; every other p in [0.1, 2) is backed by a quantile
// table built from the numeric CDF of the reference law with characteristic
// function exp(-|t|^p).

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

namespace lptrack {

enum class StableForm : std::uint8_t { kCauchy, kGaussian, kTabulated };

inline constexpr double kMinStableIndex = 0.1;

// Upper-half quantiles on a grid that is uniform in the tail coordinate
// y = -log2(2 * (1 - u)), so u = 1/2 maps to y = 0 and u = 1 - 2^-20 to
// y = 19. Values are already normalized (multiplied by the law's scale).
struct QuantileTable {
  double y_max = 0.0;
  std::vector<double> values;  // Q at y_k = k * y_max / (size - 1)
  std::vector<double> slopes;  // dQ/dy at the nodes, monotone-limited

  std::size_t intervals() const { return values.empty() ? 0 : values.size() - 1; }
};

struct LawOptions {
  std::uint32_t table_intervals = 1u << 16;
  double table_y_max = 19.0;
};

class StableLaw {
 public:
  double p() const { return p_; }
  // Multiplier applied to the reference variate (standard Cauchy for p = 1,
  // standard normal for p = 2, exp(-|t|^p) otherwise).
  double scale() const { return scale_; }
  StableForm form() const { return form_; }
  // Null for the closed forms.
  const QuantileTable* table() const { return form_ == StableForm::kTabulated ? &table_ : nullptr; }

  // Strictly increasing, Q(1 - u) = -Q(u). Throws DomainError for u outside (0, 1).
  double quantile(double u) const;
  // Quantile of the upper tail: returns Q(1 - w) for w in (0, 1/2].
  double upper_quantile(double w) const;

  // P(Z <= x) and P(Z > x). For tabulated laws these invert the table.
  double cdf(double x) const;
  double survival(double x) const;

  // Chambers-Mallows-Stuck transform with theta = pi (u1 - 1/2), W = -ln u2.
  double sample(double u1, double u2) const;

  // Power-law tail constant implied by the table edge: P(Z > x) ~ c / x^p.
  double tail_constant() const;

 private:
  friend StableLaw make_law(double p, const LawOptions& options);
  friend StableLaw load_law_table(const std::filesystem::path& path, double p,
                                  std::uint32_t table_intervals);

  double table_upper(double w) const;
  double table_survival(double x) const;

  double p_ = 0.0;
  double scale_ = 1.0;
  StableForm form_ = StableForm::kTabulated;
  QuantileTable table_;
  double edge_w_ = 0.0;  // tail mass at the last table node
};

// Throws DomainError for p outside [0.1, 2], ConstructionError if the numeric
// inversion does not produce a strictly monotone normalized table.
StableLaw make_law(double p, const LawOptions& options = {});

// Process-wide memo of default-resolution laws. If LPTRACK_TABLE_DIR is set,
// tabulated laws are loaded from and saved to that directory.
std::shared_ptr<const StableLaw> shared_law(double p);

// Versioned binary quantile-table cache ("LPQT"). Loading checks the key
// (p, table_intervals), the CRC-32C trailer and the Q(0.75) = 1 normalization.
void save_law_table(const StableLaw& law, const std::filesystem::path& path);
StableLaw load_law_table(const std::filesystem::path& path, double p,
                         std::uint32_t table_intervals = LawOptions{}.table_intervals);

// Numerics of the reference parametrization exp(-|t|^p), 0 < p < 2, p != 1.
namespace reference {

// P(X > x) for x >= 0 via Zolotarev's integral representation.
double survival(double p, double x);
// Density at x >= 0, same representation.
double density(double p, double x);
// Raw CMS variate of the reference law.
double cms(double p, double theta, double w);

}  // namespace reference

}  // namespace lptrack

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

// Tail experiments behind the tracking analysis.

#include <algorithm>
#include <cmath>

#include "lptrack/error.hpp"
#include "lptrack/field.hpp"
#include "lptrack/harness.hpp"

namespace lptrack {
namespace {

constexpr std::uint64_t kTailTag = 0x7461696c2d746573ULL;  // "tail-tes"
// Bits per variate in the tail experiments; keeps the field below 2^32.
constexpr std::uint32_t kTailBits = 30;

void check_lambdas(const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw DomainError("need at least one lambda");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] > 0.0)) throw DomainError("lambda must be positive");
    if (k > 0 && !(lambdas[k] > lambdas[k - 1])) throw DomainError("lambdas must increase");
  }
}

// Counts statistic >= lambda (or > lambda when strict) for every lambda.
std::vector<TailPoint> tabulate(const std::vector<double>& stats, const std::vector<double>& lambdas, bool strict) {
  std::vector<TailPoint> rows;
  for (double lambda : lambdas) {
    TailPoint row{lambda, 0, stats.size()};
    for (double v : stats) row.hits += strict ? v > lambda : v >= lambda;
    rows.push_back(row);
  }
  return rows;
}

// C fitted at the first row with lambda >= min_lambda and whether every such
// row satisfies P <= C / lambda^exponent.
void check_domination(TailReport& report, double exponent, double min_lambda) {
  bool anchored = false;
  report.dominated = true;
  for (const TailPoint& row : report.rows) {
    if (row.lambda < min_lambda) continue;
    if (!anchored) {
      report.fitted_constant = row.probability() * std::pow(row.lambda, exponent);
      anchored = true;
      continue;
    }
    if (row.probability() > report.fitted_constant / std::pow(row.lambda, exponent)) report.dominated = false;
  }
  if (!anchored) report.dominated = false;
}

// s-wise p-stable variates Z_0..Z_{n-1}: a random degree-(s-1) polynomial,
// its top bits as a uniform cell, the cell's quantile.
void swise_variates(const StableLaw& law, const PrimeField& field, std::uint32_t s, SeedStream& stream,
                    std::vector<double>& z) {
  const KWiseHash hash = KWiseHash::random(field, s, stream);
  const unsigned __int128 prime = field.prime();
  for (std::size_t j = 0; j < z.size(); ++j) {
    const auto bits = static_cast<std::uint64_t>((static_cast<unsigned __int128>(hash(j)) << kTailBits) / prime);
    z[j] = law.quantile(bits_to_uniform(bits, kTailBits));
  }
}

PrimeField tail_field(std::uint64_t n) { return PrimeField(next_prime(2 * std::max<std::uint64_t>(n, 1ULL << kTailBits))); }

}  // namespace

TailReport sup_tail_test(double p, std::uint32_t s, const std::vector<double>& lambdas, const MasterSeed& seed,
                         const TailSetup& setup) {
  check_lambdas(lambdas);
  if (s < 1) throw DomainError("need s >= 1");
  if (setup.n < 1 || setup.m < 1 || setup.trials < 1) throw DomainError("sup_tail_test needs n, m, trials >= 1");
  const auto law = shared_law(p);
  const PrimeField field = tail_field(setup.n);
  const ZipfSampler zipf(setup.n, kZipfExponent);

  std::vector<double> stats(setup.trials);
  parallel_for(setup.trials, setup.threads, [&](std::uint64_t trial) {
    SeedStream stream(derive_seed(seed, trial), kTailTag);
    std::vector<double> z(setup.n);
    swise_variates(*law, field, s, stream, z);
    const std::vector<std::uint64_t> perm = seeded_permutation(setup.n, stream);
    std::vector<std::uint64_t> x(setup.n, 0);
    double running = 0.0;
    double sup = 0.0;
    for (std::uint64_t t = 0; t < setup.m; ++t) {
      const std::uint64_t a = perm[zipf.rank(stream.unit())];
      ++x[a];
      running += z[a];
      sup = std::max(sup, std::abs(running));
    }
    stats[trial] = sup / lp_norm(x, p);
  });

  TailReport report;
  report.rows = tabulate(stats, lambdas, false);
  report.fit = fit_loglog(report.rows, setup.min_lambda, setup.min_hits);
  report.predicted_slope = -2.0 * p / (2.0 + p);
  check_domination(report, 2.0 * p / (2.0 + p), setup.min_lambda);
  return report;
}

TailReport sos_tail_test(double p, std::uint32_t s, const std::vector<double>& lambdas,
                         const std::vector<double>& x, const MasterSeed& seed, const TailSetup& setup) {
  check_lambdas(lambdas);
  if (x.empty()) throw DomainError("sos_tail_test needs a nonempty vector");
  if (setup.trials < 1) throw DomainError("sos_tail_test needs trials >= 1");
  const auto law = shared_law(p);
  const PrimeField field = tail_field(x.size());
  long double norm_p = 0.0L;
  for (double v : x) {
    if (!(v >= 0.0)) throw DomainError("sos_tail_test needs a nonnegative vector");
    norm_p += std::pow(static_cast<long double>(v), static_cast<long double>(p));
  }
  const double norm = static_cast<double>(std::pow(norm_p, 1.0L / p));
  if (!(norm > 0.0)) throw DomainError("sos_tail_test needs a nonzero vector");

  std::vector<double> stats(setup.trials);
  parallel_for(setup.trials, setup.threads, [&](std::uint64_t trial) {
    SeedStream stream(derive_seed(seed, trial), kTailTag + 1);
    std::vector<double> z(x.size());
    swise_variates(*law, field, s, stream, z);
    long double sum = 0.0L;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const long double term = static_cast<long double>(x[j]) * z[j];
      sum += term * term;
    }
    stats[trial] = static_cast<double>(std::sqrt(sum)) / norm;
  });

  TailReport report;
  report.rows = tabulate(stats, lambdas, false);
  report.fit = fit_loglog(report.rows, setup.min_lambda, setup.min_hits);
  report.predicted_slope = -p;
  check_domination(report, p, setup.min_lambda);
  return report;
}

TailReport chaining_test(const Stream& chain, std::uint64_t n, const std::vector<double>& lambdas,
                         const MasterSeed& seed, const TailSetup& setup) {
  check_lambdas(lambdas);
  if (chain.empty()) throw DomainError("chaining_test needs a nonempty chain");
  if (setup.trials < 1) throw DomainError("chaining_test needs trials >= 1");
  const std::vector<double> v = frequency_vector(chain, n);
  long double sq = 0.0L;
  for (double c : v) sq += static_cast<long double>(c) * c;
  const double norm = std::sqrt(static_cast<double>(sq));
  const PrimeField field(next_prime(std::max<std::uint64_t>(n, 1ULL << 31)));

  std::vector<double> stats(setup.trials);
  parallel_for(setup.trials, setup.threads, [&](std::uint64_t trial) {
    SeedStream stream(derive_seed(seed, trial), kTailTag + 2);
    const SignHash sigma(field, stream);
    double running = 0.0;
    double sup = 0.0;
    for (const Update& u : chain) {
      running += static_cast<double>(sigma(u.item)) * static_cast<double>(u.weight);
      sup = std::max(sup, std::abs(running));
    }
    stats[trial] = sup / norm;
  });

  TailReport report;
  report.rows = tabulate(stats, lambdas, true);
  report.fit = fit_loglog(report.rows, setup.min_lambda, setup.min_hits);
  report.predicted_slope = -2.0;
  check_domination(report, 2.0, setup.min_lambda);
  return report;
}

TailReport stable_tail_test(double p, const std::vector<double>& lambdas, std::uint64_t samples,
                            const MasterSeed& seed) {
  check_lambdas(lambdas);
  if (samples < 1) throw DomainError("stable_tail_test needs samples >= 1");
  const auto law = shared_law(p);
  SeedStream stream(seed, kTailTag + 3);
  std::vector<double> z(samples);
  for (double& v : z) {
    const double u1 = stream.unit();
    const double u2 = stream.unit();
    v = law->sample(u1, u2);
  }
  TailReport report;
  report.rows = tabulate(z, lambdas, true);
  report.fit = fit_loglog(report.rows, lambdas.front(), 10);
  report.predicted_slope = -p;
  check_domination(report, p, lambdas.front());
  return report;
}

double paley_zygmund_fraction(const std::vector<double>& v, std::uint64_t trials, const MasterSeed& seed,
                              unsigned threads) {
  if (v.empty() || trials < 1) throw DomainError("paley_zygmund_fraction needs a vector and trials >= 1");
  long double sq = 0.0L;
  for (double c : v) sq += static_cast<long double>(c) * c;
  const long double bound = 2.0L / 3.0L * sq;
  const PrimeField field(next_prime(std::max<std::uint64_t>(v.size(), 1ULL << 31)));
  std::vector<std::uint8_t> hit(trials, 0);
  parallel_for(trials, threads, [&](std::uint64_t trial) {
    SeedStream stream(derive_seed(seed, trial), kTailTag + 4);
    const SignHash sigma(field, stream);
    long double dot = 0.0L;
    for (std::size_t j = 0; j < v.size(); ++j) dot += static_cast<long double>(sigma(j)) * v[j];
    hit[trial] = dot * dot >= bound;
  });
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(trials);
}

}  // namespace lptrack

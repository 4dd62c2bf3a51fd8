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

#include "lptrack/stable.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "lptrack/bytes.hpp"
#include "lptrack/error.hpp"

namespace lptrack {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;
constexpr char kTableMagic[4] = {'L', 'P', 'Q', 'T'};
constexpr std::uint16_t kTableVersion = 1;
// Indices this close to 1 use the Cauchy closed form; Zolotarev's
// exponent a / (a - 1) is unusable there.
constexpr double kCauchySnap = 5e-4;
constexpr double kTailGridStep = 1.0 / 32;

// Standard normal quantile of the upper tail mass w.
// Evaluated in double precision; the default long double promotion is several
// times slower and buys nothing after rounding.
using DoublePolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
double normal_upper(double w) { return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * w, DoublePolicy()); }

// log P(X > e^t) of the reference law sampled on a uniform t grid, with
// exact derivatives -x f(x) / P(X > x), as a cubic Hermite interpolant.
class LogTail {
 public:
  LogTail(double p, double t_min, double step, double stop_log_w) : t_min_(t_min), step_(step) {
    for (double t = t_min;; t += step) {
      const double x = std::exp(t);
      const double s = reference::survival(p, x);
      const double f = reference::density(p, x);
      if (!(s > 0.0) || !(f > 0.0)) throw ConstructionError("stable tail underflow during tabulation");
      psi_.push_back(std::log(s));
      dpsi_.push_back(-x * f / s);
      if (psi_.back() < stop_log_w) break;
      if (psi_.size() > 200000) throw ConstructionError("stable tail grid did not terminate");
    }
    for (std::size_t j = 0; j + 1 < psi_.size(); ++j) {
      if (!(psi_[j + 1] < psi_[j])) throw ConstructionError("stable tail is not strictly decreasing");
    }
  }

  // Returns t with psi(t) = target, and psi'(t); the cursor advances
  // monotonically because targets arrive in decreasing order.
  std::pair<double, double> invert(double target) {
    while (cursor_ + 2 < psi_.size() && psi_[cursor_ + 1] > target) ++cursor_;
    const std::size_t j = cursor_;
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 64; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (value(j, mid) > target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double s = 0.5 * (lo + hi);
    return {t_min_ + (static_cast<double>(j) + s) * step_, derivative(j, s)};
  }

 private:
  double value(std::size_t j, double s) const {
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * psi_[j] + (s3 - 2 * s2 + s) * step_ * dpsi_[j] +
           (-2 * s3 + 3 * s2) * psi_[j + 1] + (s3 - s2) * step_ * dpsi_[j + 1];
  }
  double derivative(std::size_t j, double s) const {
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * psi_[j] + (-6 * s2 + 6 * s) * psi_[j + 1]) / step_ +
           (3 * s2 - 4 * s + 1) * dpsi_[j] + (3 * s2 - 2 * s) * dpsi_[j + 1];
  }

  double t_min_;
  double step_;
  std::vector<double> psi_;
  std::vector<double> dpsi_;
  std::size_t cursor_ = 0;
};

double hermite(double q0, double q1, double m0, double m1, double h, double s) {
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * q0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * q1 +
         (s3 - s2) * h * m1;
}

void validate_table(const StableLaw& law) {
  const QuantileTable* table = law.table();
  const auto& v = table->values;
  if (v.size() < 2 || v.front() != 0.0) throw ConstructionError("quantile table: bad shape");
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    if (!(v[k + 1] > v[k]) || !std::isfinite(v[k + 1]) || !(table->slopes[k] >= 0.0)) {
      throw ConstructionError("quantile table is not strictly increasing");
    }
  }
  if (std::abs(law.quantile(0.75) - 1.0) > 1e-9) {
    throw ConstructionError("quantile table violates the Q(0.75) = 1 normalization");
  }
}

}  // namespace

StableLaw make_law(double p, const LawOptions& options) {
  if (!(p >= kMinStableIndex && p <= 2.0)) {
    throw DomainError("stability index p must lie in [0.1, 2]");
  }
  StableLaw law;
  law.p_ = p;
  if (std::abs(p - 1.0) <= kCauchySnap) {
    law.form_ = StableForm::kCauchy;
    law.scale_ = 1.0;
    return law;
  }
  if (p == 2.0) {
    law.form_ = StableForm::kGaussian;
    law.scale_ = 1.0 / normal_upper(0.25);
    return law;
  }
  if (options.table_intervals < 16 || !(options.table_y_max > 1.0)) {
    throw DomainError("quantile table needs at least 16 intervals and y_max > 1");
  }

  law.form_ = StableForm::kTabulated;
  const std::uint32_t n = options.table_intervals;
  const double h = options.table_y_max / n;
  const double edge_w = 0.5 * std::exp2(-options.table_y_max);
  const double f0 = reference::density(p, 0.0);
  // The first node beyond u = 1/2 sits at 1/2 - w ~ h ln2 / 2; start the
  // grid well inside that.
  const double t_min = std::log(1e-3 * h / f0);
  LogTail tail(p, t_min, kTailGridStep, std::log(edge_w) - 1.0);

  const double x75 = std::exp(LogTail(tail).invert(std::log(0.25)).first);
  law.scale_ = 1.0 / x75;

  QuantileTable& table = law.table_;
  table.y_max = options.table_y_max;
  table.values.assign(n + 1, 0.0);
  table.slopes.assign(n + 1, 0.0);
  table.slopes[0] = law.scale_ * 0.5 * kLn2 / f0;
  for (std::uint32_t k = 1; k <= n; ++k) {
    const double w = 0.5 * std::exp2(-h * k);
    const auto [t, dpsi] = tail.invert(std::log(w));
    const double x = std::exp(t);
    table.values[k] = law.scale_ * x;
    table.slopes[k] = law.scale_ * x * kLn2 / -dpsi;
  }
  // Fritsch-Carlson limiter: slopes within 3x the neighbouring secants keep
  // the cubic Hermite interpolant monotone.
  for (std::uint32_t k = 0; k < n; ++k) {
    const double secant = (table.values[k + 1] - table.values[k]) / h;
    table.slopes[k] = std::min(table.slopes[k], 3.0 * secant);
    table.slopes[k + 1] = std::min(table.slopes[k + 1], 3.0 * secant);
  }
  law.edge_w_ = 0.5 * std::exp2(-table.y_max);
  validate_table(law);
  return law;
}

double StableLaw::table_upper(double w) const {
  const double y = -std::log2(2.0 * w);
  const std::size_t n = table_.intervals();
  if (y >= table_.y_max) {
    return table_.values[n] * std::pow(edge_w_ / w, 1.0 / p_);
  }
  const double h = table_.y_max / static_cast<double>(n);
  const double pos = std::max(0.0, y / h);
  const std::size_t k = std::min(static_cast<std::size_t>(pos), n - 1);
  const double s = pos - static_cast<double>(k);
  return hermite(table_.values[k], table_.values[k + 1], table_.slopes[k], table_.slopes[k + 1], h, s);
}

double StableLaw::upper_quantile(double w) const {
  if (!(w > 0.0 && w <= 0.5)) throw DomainError("upper tail mass must lie in (0, 1/2]");
  switch (form_) {
    case StableForm::kCauchy:
      return 1.0 / std::tan(kPi * w);
    case StableForm::kGaussian:
      return scale_ * normal_upper(w);
    case StableForm::kTabulated:
      break;
  }
  return table_upper(w);
}

double StableLaw::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile argument must lie in (0, 1)");
  if (u == 0.5) return 0.0;
  if (u < 0.5) return -upper_quantile(u);
  return upper_quantile(1.0 - u);
}

double StableLaw::table_survival(double x) const {
  const auto& v = table_.values;
  const std::size_t n = table_.intervals();
  if (x >= v[n]) return edge_w_ * std::pow(v[n] / x, p_);
  const auto it = std::upper_bound(v.begin(), v.end(), x);
  const std::size_t k = static_cast<std::size_t>(std::distance(v.begin(), it)) - 1;
  const double h = table_.y_max / static_cast<double>(n);
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (hermite(v[k], v[k + 1], table_.slopes[k], table_.slopes[k + 1], h, mid) < x) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double y = (static_cast<double>(k) + 0.5 * (lo + hi)) * h;
  return 0.5 * std::exp2(-y);
}

double StableLaw::survival(double x) const {
  if (std::isnan(x)) throw DomainError("survival of NaN");
  if (x < 0.0) return 1.0 - survival(-x);
  switch (form_) {
    case StableForm::kCauchy:
      return 0.5 - std::atan(x) / kPi;
    case StableForm::kGaussian:
      return 0.5 * std::erfc(x / (scale_ * std::numbers::sqrt2));
    case StableForm::kTabulated:
      break;
  }
  if (x == 0.0) return 0.5;
  return table_survival(x);
}

double StableLaw::cdf(double x) const {
  if (x < 0.0) return survival(-x);
  return 1.0 - survival(x);
}

double StableLaw::sample(double u1, double u2) const {
  if (!(u1 > 0.0 && u1 < 1.0 && u2 > 0.0 && u2 < 1.0)) {
    throw DomainError("sampler inputs must lie in (0, 1)");
  }
  const double theta = kPi * (u1 - 0.5);
  const double w = -std::log(u2);
  switch (form_) {
    case StableForm::kCauchy:
      return std::tan(theta);
    case StableForm::kGaussian:
      return scale_ * std::sqrt(2.0 * w) * std::sin(theta);
    case StableForm::kTabulated:
      break;
  }
  return scale_ * reference::cms(p_, theta, w);
}

double StableLaw::tail_constant() const {
  switch (form_) {
    case StableForm::kCauchy:
      return 1.0 / kPi;
    case StableForm::kGaussian:
      return 0.0;
    case StableForm::kTabulated:
      break;
  }
  return edge_w_ * std::pow(table_.values.back(), p_);
}

void save_law_table(const StableLaw& law, const std::filesystem::path& path) {
  const QuantileTable* table = law.table();
  if (table == nullptr) throw DomainError("closed-form laws have no quantile table");
  ByteWriter out;
  out.put_bytes(kTableMagic, 4);
  out.put<std::uint16_t>(kTableVersion);
  out.put<double>(law.p());
  out.put<std::uint32_t>(static_cast<std::uint32_t>(table->intervals()));
  out.put<double>(table->y_max);
  out.put<double>(law.scale());
  for (double v : table->values) out.put<double>(v);
  for (double s : table->slopes) out.put<double>(s);
  out.put_crc();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(out.bytes().data()), static_cast<std::streamsize>(out.bytes().size()));
  if (!f) throw FormatError("cannot write quantile table " + path.string());
}

StableLaw load_law_table(const std::filesystem::path& path, double p, std::uint32_t table_intervals) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open quantile table " + path.string());
  std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  ByteReader in(checked_payload(raw));
  char magic[4];
  in.get_bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kTableMagic)) throw FormatError("not a quantile table");
  if (in.get<std::uint16_t>() != kTableVersion) throw FormatError("unsupported quantile table version");
  const double file_p = in.get<double>();
  const std::uint32_t n = in.get<std::uint32_t>();
  if (file_p != p || n != table_intervals) throw FormatError("quantile table key mismatch");
  StableLaw law;
  law.p_ = p;
  law.form_ = StableForm::kTabulated;
  law.table_.y_max = in.get<double>();
  law.scale_ = in.get<double>();
  if (in.remaining() != 2 * 8 * (static_cast<std::size_t>(n) + 1)) throw FormatError("quantile table size mismatch");
  law.table_.values.resize(n + 1);
  law.table_.slopes.resize(n + 1);
  for (auto& v : law.table_.values) v = in.get<double>();
  for (auto& s : law.table_.slopes) s = in.get<double>();
  law.edge_w_ = 0.5 * std::exp2(-law.table_.y_max);
  try {
    validate_table(law);
  } catch (const ConstructionError& e) {
    throw FormatError(std::string("invalid quantile table: ") + e.what());
  }
  return law;
}

std::shared_ptr<const StableLaw> shared_law(double p) {
  static std::mutex mu;
  static std::map<double, std::shared_ptr<const StableLaw>> laws;
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = laws.find(p); it != laws.end()) return it->second;

  std::shared_ptr<const StableLaw> law;
  const char* dir = std::getenv("LPTRACK_TABLE_DIR");
  const bool tabulated = p >= kMinStableIndex && p < 2.0 && std::abs(p - 1.0) > kCauchySnap;
  std::filesystem::path cache;
  if (dir != nullptr && *dir != '\0' && tabulated) {
    std::ostringstream name;
    name.precision(17);
    name << "stable_p" << p << "_n" << LawOptions{}.table_intervals << ".lpqt";
    cache = std::filesystem::path(dir) / name.str();
    try {
      law = std::make_shared<const StableLaw>(load_law_table(cache, p));
    } catch (const FormatError&) {
    }
  }
  if (!law) {
    law = std::make_shared<const StableLaw>(make_law(p));
    if (!cache.empty()) {
      try {
        std::filesystem::create_directories(cache.parent_path());
        save_law_table(*law, cache);
      } catch (const std::exception&) {
      }
    }
  }
  laws.emplace(p, law);
  return law;
}

}  // namespace lptrack

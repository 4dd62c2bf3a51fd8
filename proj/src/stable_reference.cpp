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

// Zolotarev's integral representation of the symmetric stable law with
// characteristic function exp(-|t|^a), a != 1. For x > 0 and
//
//   g(theta) = x^(a/(a-1)) * V(theta),
//   V(theta) = (cos(theta) / sin(a theta))^(a/(a-1)) * cos((a-1) theta) / cos(theta),
//
// the tail is P(X > x) = (1/pi) int_0^{pi/2} exp(-g) for a > 1 and
// (1/pi) int_0^{pi/2} (1 - exp(-g)) for a < 1, and the density is
// f(x) = a / (pi |a - 1| x) int_0^{pi/2} g exp(-g). g is monotone in theta,
// so both integrals are split where g = 1, the only place they can be sharp.

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "lptrack/error.hpp"
#include "lptrack/stable.hpp"

namespace lptrack::reference {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2;
constexpr double kRelTol = 1e-10;
constexpr int kInnerPanels = 24;
constexpr double kNegligible = 1e-17;

// cos_theta is passed separately so that callers near pi/2 can supply it
// without cancellation.
double log_v(double a, double theta, double cos_theta) {
  const double e = a / (a - 1.0);
  const double log_cos = std::log(cos_theta);
  return e * (log_cos - std::log(std::sin(a * theta))) + std::log(std::cos((a - 1.0) * theta)) - log_cos;
}

double log_v(double a, double theta) { return log_v(a, theta, std::cos(theta)); }

// Splits [0, pi/2] at the theta where log g crosses zero. log g runs from
// -inf to +inf for a < 1 and from +inf to -inf for a > 1.
double split_point(double a, double log_xe) {
  double lo = 0.0;
  double hi = kHalfPi;
  const bool increasing = a < 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double lg = log_xe + log_v(a, mid);
    if ((lg < 0.0) == increasing) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Boost compares an unscaled error estimate against a scaled tolerance, so
// short intervals never converge; integrating over [0, 1] sidesteps that.
template <typename F>
double integrate(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  const double w = b - a;
  auto unit = [&](double u) { return w * f(a + w * u); };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(unit, 0.0, 1.0, 8, kRelTol, &err);
}

// The integrands change on the scale of the split's distance to the nearer
// endpoint, which shrinks without bound in the tails. Panels that grow
// geometrically away from the split keep that scale resolved. Each integrand
// is monotone on either side of the split, so a sweep stops once its panels
// no longer contribute.
template <typename F>
double integrate_around(F&& f, double split) {
  const bool mirrored = split > kHalfPi / 2;
  const double s = mirrored ? kHalfPi - split : split;
  auto g = [&](double phi) { return mirrored ? f(kHalfPi - phi, std::sin(phi)) : f(phi, std::cos(phi)); };
  if (!(s > 0.0)) return integrate(g, 0.0, kHalfPi);
  double total = 0.0;
  for (double lo = s; lo < kHalfPi; lo *= 2.0) {
    const double part = integrate(g, lo, std::min(2.0 * lo, kHalfPi));
    total += part;
    if (lo > s && part <= kNegligible * total) break;
  }
  double hi = s;
  for (int k = 0; k < kInnerPanels; ++k, hi *= 0.5) {
    const double part = integrate(g, 0.5 * hi, hi);
    total += part;
    if (k > 0 && part <= kNegligible * total) return total;
  }
  return total + integrate(g, 0.0, hi);
}

void check(double a, double x) {
  if (!(a > 0.0 && a < 2.0) || std::abs(a - 1.0) < 1e-9) {
    throw DomainError("reference stable numerics need 0 < p < 2, p != 1");
  }
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("reference stable numerics need finite x >= 0");
}

}  // namespace

double survival(double a, double x) {
  check(a, x);
  if (x == 0.0) return 0.5;
  const double log_xe = a / (a - 1.0) * std::log(x);
  const double split = split_point(a, log_xe);
  if (a < 1.0) {
    auto f = [&](double t, double c) { return -std::expm1(-std::exp(log_xe + log_v(a, t, c))); };
    return integrate_around(f, split) / kPi;
  }
  auto f = [&](double t, double c) { return std::exp(-std::exp(log_xe + log_v(a, t, c))); };
  return integrate_around(f, split) / kPi;
}

double density(double a, double x) {
  check(a, x);
  if (x == 0.0) return boost::math::tgamma(1.0 + 1.0 / a) / kPi;
  const double log_xe = a / (a - 1.0) * std::log(x);
  const double split = split_point(a, log_xe);
  auto f = [&](double t, double c) {
    const double lg = log_xe + log_v(a, t, c);
    return std::exp(lg - std::exp(lg));
  };
  const double integral = integrate_around(f, split);
  return a / (kPi * std::abs(a - 1.0) * x) * integral;
}

double cms(double a, double theta, double w) {
  if (a == 1.0) return std::tan(theta);
  return std::sin(a * theta) / std::pow(std::cos(theta), 1.0 / a) *
         std::pow(std::cos((1.0 - a) * theta) / w, (1.0 - a) / a);
}

}  // namespace lptrack::reference

/* Copyright 2026 The qbcf Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License. */

#ifndef QBCF_NORMAL_HPP
#define QBCF_NORMAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include <boost/math/special_functions/erf.hpp>

namespace qbcf {

inline double normal_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail 1 - Phi(x), accurate for large positive x.
inline double normal_sf(double x) noexcept { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Phi^{-1}(p) for p in [0, 1]; returns -inf / +inf at the end points.
inline double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

namespace detail {

// Gauss-Legendre half-rules (nodes on (0,1] of the symmetric rule on [-1,1]).
struct GaussLegendreHalf {
  int count;
  std::array<double, 10> weight;
  std::array<double, 10> node;
};

inline const GaussLegendreHalf& gl_rule(double abs_r) {
  static const GaussLegendreHalf n6{3,
                                    {0.1713244923791705, 0.3607615730481384, 0.4679139345726904},
                                    {0.9324695142031522, 0.6612093864662647, 0.2386191860831970}};
  static const GaussLegendreHalf n12{
      6,
      {0.04717533638651177, 0.1069393259953183, 0.1600783285433464, 0.2031674267230659,
       0.2334925365383547, 0.2491470458134029},
      {0.9815606342467191, 0.9041172563704750, 0.7699026741943050, 0.5873179542866171,
       0.3678314989981802, 0.1252334085114692}};
  static const GaussLegendreHalf n20{
      10,
      {0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
       0.1019301198172404, 0.1181945319615184, 0.1316886384491766, 0.1420961093183821,
       0.1491729864726037, 0.1527533871307259},
      {0.9931285991850949, 0.9639719272779138, 0.9122344282513259, 0.8391169718222188,
       0.7463319064601508, 0.6360536807265150, 0.5108670019508271, 0.3737060887154196,
       0.2277858511416451, 0.07652652113349733}};
  if (abs_r < 0.3) return n6;
  if (abs_r < 0.75) return n12;
  return n20;
}

// P(X > h, Y > k) for a standard bivariate normal with correlation r
// (Genz's BVNU: Gauss-Legendre quadrature of Plackett's arcsine identity,
// with the Drezner-Wesolowsky expansion for |r| >= 0.925).
inline double bvn_upper(double h, double k, double r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (h == inf || k == inf) return 0.0;
  if (h == -inf) return k == -inf ? 1.0 : normal_cdf(-k);
  if (k == -inf) return normal_cdf(-h);
  if (r == 0.0) return normal_cdf(-h) * normal_cdf(-k);

  constexpr double two_pi = 2.0 * std::numbers::pi;
  const GaussLegendreHalf& rule = gl_rule(std::abs(r));
  double hk = h * k;
  double bvn = 0.0;

  if (std::abs(r) < 0.925) {
    const double hs = 0.5 * (h * h + k * k);
    const double asr = 0.5 * std::asin(r);
    for (int i = 0; i < rule.count; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + sign * rule.node[i]));
        bvn += rule.weight[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    return std::clamp(bvn * asr / two_pi + normal_cdf(-h) * normal_cdf(-k), 0.0, 1.0);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = 1.0 - r * r;
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 80.0;
    double asr = -0.5 * (bs / as + hk);
    if (asr > -100.0) {
      bvn = a * std::exp(asr) *
            (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
    }
    if (hk > -100.0) {
      const double b = std::sqrt(bs);
      const double sp = std::sqrt(two_pi) * normal_cdf(-b / a);
      bvn -= std::exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
    }
    a *= 0.5;
    double sum = 0.0;
    for (int i = 0; i < rule.count; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const double xs = std::pow(a * (1.0 + sign * rule.node[i]), 2);
        const double asr_i = -0.5 * (bs / xs + hk);
        if (asr_i <= -100.0) continue;
        const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
        const double rs = std::sqrt(1.0 - xs);
        const double ep = std::exp(-0.5 * hk * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
        sum += rule.weight[i] * std::exp(asr_i) * (sp - ep);
      }
    }
    bvn = (a * sum - bvn) / two_pi;
  }
  if (r > 0.0) {
    bvn += normal_cdf(-std::max(h, k));
  } else if (h >= k) {
    bvn = -bvn;
  } else {
    const double l = h < 0.0 ? normal_cdf(k) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-k);
    bvn = l - bvn;
  }
  return std::clamp(bvn, 0.0, 1.0);
}

}  // namespace detail

/*! \brief Standard bivariate normal CDF P(X <= u1, Y <= u2) with correlation rho.

    Arguments beyond +-8 are clamped to +-infinity, which changes the result
    by less than Phi(-8) ~ 6e-16. The arguments are put in a canonical order
    before evaluation, so bvn_cdf(a, b, r) == bvn_cdf(b, a, r) bitwise.
*/
inline double bvn_cdf(double u1, double u2, double rho) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto clamp_arg = [](double u) { return u > 8.0 ? inf : (u < -8.0 ? -inf : u); };
  u1 = clamp_arg(u1);
  u2 = clamp_arg(u2);
  if (u1 > u2) std::swap(u1, u2);
  if (u1 == -inf) return 0.0;
  if (u2 == inf) return normal_cdf(u1);
  return detail::bvn_upper(-u1, -u2, rho);
}

}  // namespace qbcf

#endif  // QBCF_NORMAL_HPP

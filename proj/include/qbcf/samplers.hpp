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

#ifndef QBCF_SAMPLERS_HPP
#define QBCF_SAMPLERS_HPP

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "qbcf/error.hpp"
#include "qbcf/linalg.hpp"
#include "qbcf/normal.hpp"
#include "qbcf/random_stream.hpp"

namespace qbcf {

/// Draw from N(mean, cov). Positive semidefinite covariances are handled
/// through a pivoted LDL^T factorisation, so zero-variance coordinates come
/// back exactly equal to their mean.
inline Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const CovarianceMatrix& cov,
                                  RandomStream& rng) {
  const Eigen::Index dim = cov.dim();
  if (mean.size() != dim) throw std::invalid_argument("sample_mvn: dimension mismatch");
  Eigen::VectorXd z(dim);
  for (Eigen::Index k = 0; k < dim; ++k) z(k) = rng.normal();

  Eigen::LLT<Eigen::MatrixXd> llt(cov.matrix());
  if (llt.info() == Eigen::Success) return mean + llt.matrixL() * z;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov.matrix());
  Eigen::VectorXd d = ldlt.vectorD();
  const double tol = 1e-12 * std::max(1.0, cov.matrix().cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (d(k) < -tol || !std::isfinite(d(k))) {
      throw NotPositiveDefinite("sample_mvn: covariance has a negative pivot");
    }
    d(k) = d(k) > 0.0 ? std::sqrt(d(k)) : 0.0;
  }
  Eigen::MatrixXd l = ldlt.matrixL();
  Eigen::VectorXd x = l * d.cwiseProduct(z);
  return mean + ldlt.transpositionsP().transpose() * x;
}

namespace detail {

// Standard normal restricted to [a, +inf).
inline double lower_truncated_standard(double a, RandomStream& rng) {
  if (a <= 0.0) {
    for (;;) {
      const double z = rng.normal();
      if (z > a) return z;
    }
  }
  // Exponential proposal with the optimal rate (Robert, 1995).
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a + rng.exponential() / rate;
    const double log_accept = -0.5 * (z - rate) * (z - rate);
    if (z > a && std::log(rng.uniform()) <= log_accept) return z;
  }
}

constexpr double kTailThreshold = 4.0;

// Standard normal restricted to [a, b] with 0 <= a < b < inf.
inline double two_sided_positive(double a, double b, RandomStream& rng) {
  if (a >= kTailThreshold) {
    if (b - a <= 1.0 / a) {
      // Uniform proposal; density ratio exp((a^2 - z^2) / 2) <= 1 on [a, b].
      for (;;) {
        const double z = a + (b - a) * rng.uniform();
        if (z > a && z < b && std::log(rng.uniform()) <= 0.5 * (a * a - z * z)) return z;
      }
    }
    for (;;) {
      const double z = lower_truncated_standard(a, rng);
      if (z < b) return z;
    }
  }
  const double qa = normal_sf(a);
  const double qb = normal_sf(b);
  for (;;) {
    const double p = qa - rng.uniform() * (qa - qb);
    const double z = -normal_quantile(p);
    if (z > a && z < b) return z;
  }
}

inline double truncated_standard(double a, double b, RandomStream& rng) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (a == -inf && b == inf) return rng.normal();
  if (b == inf) return lower_truncated_standard(a, rng);
  if (a == -inf) return -lower_truncated_standard(-b, rng);
  if (a >= 0.0) return two_sided_positive(a, b, rng);
  if (b <= 0.0) return -two_sided_positive(-b, -a, rng);
  const double pa = normal_cdf(a);
  const double pb = normal_cdf(b);
  for (;;) {
    const double z = normal_quantile(pa + rng.uniform() * (pb - pa));
    if (z > a && z < b) return z;
  }
}

}  // namespace detail

/*! \brief Draw from N(mu, sigma^2) restricted to the open interval (lower, upper).

    Infinite bounds are allowed. After standardising to (a, b):
      - one-sided intervals use plain normal rejection when the truncation
        point is on the bulk side (acceptance >= 1/2) and Robert's
        exponential-proposal rejection otherwise;
      - two-sided intervals lying beyond 4 sigma on one side use exponential
        rejection (uniform rejection when narrower than 1/a);
      - all other two-sided intervals use the inverse CDF, taken in the upper
        tail when the interval is positive so no precision is lost.
    The returned value is always strictly inside the interval.
*/
inline double sample_truncated_normal(double mu, double sigma, double lower, double upper,
                                      RandomStream& rng) {
  if (!(lower < upper)) {
    throw InvalidInterval("lower=" + std::to_string(lower) + " upper=" + std::to_string(upper));
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("sample_truncated_normal: sigma must be > 0");
  const double a = (lower - mu) / sigma;
  const double b = (upper - mu) / sigma;
  for (;;) {
    const double x = mu + sigma * detail::truncated_standard(a, b, rng);
    // Rounding in the back-transform can land on a bound.
    if (x > lower && x < upper) return x;
  }
}

/// Wishart(dof, scale) draw by the Bartlett decomposition:
/// W = L A A^T L^T with L = chol(scale), A lower triangular,
/// A_ii^2 ~ chi^2_{dof - i}, A_ij ~ N(0, 1) below the diagonal.
inline CovarianceMatrix sample_wishart(double dof, const CovarianceMatrix& scale,
                                       RandomStream& rng) {
  const Eigen::Index dim = scale.dim();
  if (dof < static_cast<double>(dim)) {
    throw std::invalid_argument("sample_wishart: dof must be >= dimension");
  }
  const Eigen::MatrixXd l = cholesky(scale);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Eigen::MatrixXd la = l * a;
  Eigen::MatrixXd w = la * la.transpose();
  w = 0.5 * (w + w.transpose());
  return CovarianceMatrix(std::move(w));
}

}  // namespace qbcf

#endif  // QBCF_SAMPLERS_HPP

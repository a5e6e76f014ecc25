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

#ifndef QBCF_LINALG_HPP
#define QBCF_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "qbcf/error.hpp"

namespace qbcf {

/// Symmetric real matrix used as a covariance. Positive definiteness is
/// checked lazily by cholesky().
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) {
      throw std::invalid_argument("covariance matrix must be square and non-empty");
    }
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    if (!m_.allFinite() || (m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("covariance matrix must be finite and symmetric");
    }
  }

  static CovarianceMatrix identity(Eigen::Index dim) {
    return CovarianceMatrix(Eigen::MatrixXd::Identity(dim, dim));
  }

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

/// Lower Cholesky factor of a symmetric matrix; throws NotPositiveDefinite
/// when a pivot is not strictly positive.
inline Eigen::MatrixXd cholesky(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("Cholesky pivot <= 0 for " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + " matrix");
  }
  return llt.matrixL();
}

inline Eigen::MatrixXd cholesky(const CovarianceMatrix& m) { return cholesky(m.matrix()); }

inline bool is_positive_definite(const Eigen::MatrixXd& m) {
  return Eigen::LLT<Eigen::MatrixXd>(m).info() == Eigen::Success;
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("cannot invert matrix");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace qbcf

#endif  // QBCF_LINALG_HPP

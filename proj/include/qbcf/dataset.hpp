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

#ifndef QBCF_DATASET_HPP
#define QBCF_DATASET_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbcf/error.hpp"

namespace qbcf {

/*! \brief Raw input of both estimation stages.

    Alternatives are indexed 0..J with 0 the baseline. Per alternative the
    dataset carries the endogenous regressor in levels (x_e, column j) and its
    instruments (z[j], n x dz). The second stage works with differences
    against the baseline; data that are already differenced can be stored
    with a zero baseline column and constant baseline instruments.
*/
struct ChoiceDataset {
  int num_alternatives = 0;  ///< J, the number of non-baseline alternatives
  std::vector<std::int64_t> id;
  std::vector<int> choice;                ///< values in 0..J
  Eigen::MatrixXd x_e;                    ///< n x (J + 1)
  std::vector<Eigen::MatrixXd> z;         ///< J + 1 matrices of n x dz
  std::optional<Eigen::MatrixXd> v_true;  ///< n x (J + 1), simulated data only

  std::size_t size() const noexcept { return choice.size(); }
  Eigen::Index instrument_dim() const { return z.empty() ? 0 : z.front().cols(); }

  /// Differenced endogenous regressor x_e(i, j) - x_e(i, 0) for j = 1..J.
  Eigen::MatrixXd x_dagger() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd out(n, num_alternatives);
    for (int j = 1; j <= num_alternatives; ++j) out.col(j - 1) = x_e.col(j) - x_e.col(0);
    return out;
  }

  /// True differenced control function v(i, j) - v(i, 0), when known.
  std::optional<Eigen::MatrixXd> v_dagger_true() const {
    if (!v_true) return std::nullopt;
    Eigen::MatrixXd out(v_true->rows(), num_alternatives);
    for (int j = 1; j <= num_alternatives; ++j) out.col(j - 1) = v_true->col(j) - v_true->col(0);
    return out;
  }

  void validate() const {
    const auto n = static_cast<Eigen::Index>(size());
    if (num_alternatives < 1) throw SchemaError("need at least one non-baseline alternative");
    if (static_cast<Eigen::Index>(id.size()) != n) throw SchemaError("id column length mismatch");
    if (x_e.rows() != n || x_e.cols() != num_alternatives + 1) {
      throw SchemaError("x_e must be n x (J + 1)");
    }
    if (static_cast<int>(z.size()) != num_alternatives + 1) {
      throw SchemaError("need one instrument block per alternative");
    }
    for (const auto& block : z) {
      if (block.rows() != n || block.cols() != instrument_dim() || block.cols() < 1) {
        throw SchemaError("instrument blocks must all be n x dz with dz >= 1");
      }
      if (!block.allFinite()) throw SchemaError("instruments must be finite");
    }
    if (!x_e.allFinite()) throw SchemaError("endogenous regressors must be finite");
    if (v_true && (v_true->rows() != n || v_true->cols() != num_alternatives + 1)) {
      throw SchemaError("v_true must be n x (J + 1)");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = choice[static_cast<std::size_t>(i)];
      if (c < 0 || c > num_alternatives) {
        throw SchemaError("row " + std::to_string(i + 1) + ": choice " + std::to_string(c) +
                          " outside 0.." + std::to_string(num_alternatives));
      }
    }
  }

  /// Rows in the given order (duplicates allowed).
  ChoiceDataset select_rows(std::span<const std::size_t> rows) const {
    ChoiceDataset out;
    out.num_alternatives = num_alternatives;
    const auto m = static_cast<Eigen::Index>(rows.size());
    out.id.reserve(rows.size());
    out.choice.reserve(rows.size());
    out.x_e.resize(m, x_e.cols());
    out.z.assign(z.size(), Eigen::MatrixXd(m, instrument_dim()));
    if (v_true) out.v_true = Eigen::MatrixXd(m, v_true->cols());
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto src = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]);
      out.id.push_back(id[static_cast<std::size_t>(src)]);
      out.choice.push_back(choice[static_cast<std::size_t>(src)]);
      out.x_e.row(r) = x_e.row(src);
      for (std::size_t j = 0; j < z.size(); ++j) out.z[j].row(r) = z[j].row(src);
      if (v_true) out.v_true->row(r) = v_true->row(src);
    }
    return out;
  }
};

/*! \brief Second-stage probit data: choices and per-alternative covariate rows.

    W is stored flat: the covariate row of observation i and alternative
    j (1..J) starts at ((i * J) + (j - 1)) * p.
*/
struct MnpDataset {
  int num_alternatives = 0;  ///< J
  int num_covariates = 0;    ///< p
  std::vector<int> choice;
  std::vector<double> w;
  std::vector<std::string> coefficient_names;

  std::size_t size() const noexcept { return choice.size(); }

  const double* row(std::size_t i, int j) const {
    return w.data() + ((i * static_cast<std::size_t>(num_alternatives)) + static_cast<std::size_t>(j - 1)) *
                          static_cast<std::size_t>(num_covariates);
  }

  /// J x p covariate block of observation i.
  Eigen::MatrixXd block(std::size_t i) const {
    Eigen::MatrixXd out(num_alternatives, num_covariates);
    for (int j = 1; j <= num_alternatives; ++j) {
      for (int k = 0; k < num_covariates; ++k) out(j - 1, k) = row(i, j)[k];
    }
    return out;
  }

  /// Warnings about choices that never occur (the model is then poorly identified).
  std::vector<std::string> validate() const {
    if (num_alternatives < 1 || num_covariates < 1) throw SchemaError("empty probit design");
    if (w.size() != size() * static_cast<std::size_t>(num_alternatives * num_covariates)) {
      throw SchemaError("covariate array has the wrong length");
    }
    std::vector<int> counts(static_cast<std::size_t>(num_alternatives) + 1, 0);
    for (std::size_t i = 0; i < size(); ++i) {
      const int c = choice[i];
      if (c < 0 || c > num_alternatives) {
        throw SchemaError("row " + std::to_string(i + 1) + ": choice out of range");
      }
      ++counts[static_cast<std::size_t>(c)];
    }
    std::vector<std::string> warnings;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 0) {
        warnings.push_back("IllConditioned: alternative " + std::to_string(c) + " is never chosen");
      }
    }
    return warnings;
  }
};

/// Second-stage design W_ij = (x_e(i, j) - x_e(i, 0), control(i, j - 1)).
inline MnpDataset make_mnp_dataset(const ChoiceDataset& data, const Eigen::MatrixXd& control) {
  const std::size_t n = data.size();
  const int J = data.num_alternatives;
  if (control.rows() != static_cast<Eigen::Index>(n) || control.cols() != J) {
    throw std::invalid_argument("control function matrix must be n x J");
  }
  MnpDataset out;
  out.num_alternatives = J;
  out.num_covariates = 2;
  out.choice = data.choice;
  out.coefficient_names = {"beta_tilde", "lambda"};
  out.w.resize(n * static_cast<std::size_t>(J) * 2);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int j = 1; j <= J; ++j) {
      out.w[pos++] = data.x_e(r, j) - data.x_e(r, 0);
      out.w[pos++] = control(r, j - 1);
    }
  }
  return out;
}

}  // namespace qbcf

#endif  // QBCF_DATASET_HPP

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

#ifndef QBCF_PROBIT_ORACLE_HPP
#define QBCF_PROBIT_ORACLE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qbcf/dataset.hpp"
#include "qbcf/linalg.hpp"
#include "qbcf/nelder_mead.hpp"
#include "qbcf/normal.hpp"
#include "qbcf/parallel.hpp"
#include "qbcf/random_stream.hpp"

namespace qbcf {

/// Second-stage parameters: coefficients (beta_tilde..., lambda) and the
/// J x J differenced error covariance with sigma_11 = 1.
struct ThetaParams {
  Eigen::VectorXd beta_tilde;
  double lambda = 0.0;
  Eigen::MatrixXd sigma;

  Eigen::VectorXd coefficients() const {
    Eigen::VectorXd out(beta_tilde.size() + 1);
    out << beta_tilde, lambda;
    return out;
  }

  static ThetaParams from_coefficients(const Eigen::VectorXd& coef, Eigen::MatrixXd sigma) {
    if (coef.size() < 1) throw std::invalid_argument("need at least the lambda coefficient");
    ThetaParams out;
    out.beta_tilde = coef.head(coef.size() - 1);
    out.lambda = coef(coef.size() - 1);
    out.sigma = std::move(sigma);
    return out;
  }

  void validate(int num_alternatives) const {
    if (sigma.rows() != num_alternatives || sigma.cols() != num_alternatives) {
      throw std::invalid_argument("sigma must be J x J");
    }
    if (sigma(0, 0) != 1.0) throw std::invalid_argument("sigma_11 must equal 1");
    (void)cholesky(sigma);
  }
};

/*! \brief Closed-form choice probabilities for three alternatives given the
    mean differenced utilities mu1, mu2 and a 2 x 2 covariance with
    sigma_11 = 1.

    With sigma_2^2 = sigma(1,1), sigma_12 = sigma(0,1) and
    s = sqrt(1 + sigma_2^2 - 2 sigma_12):
      P0 = Phi2(-mu1, -mu2 / sigma_2; sigma_12 / sigma_2)
      P1 = Phi2(mu1, (mu1 - mu2) / s; (1 - sigma_12) / s)
      P2 = Phi2(mu2 / sigma_2, (mu2 - mu1) / s; (sigma_2^2 - sigma_12) / (sigma_2 s))
*/
inline std::array<double, 3> choice_probs_3alt(double mu1, double mu2, const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != 2 || sigma.cols() != 2) throw std::invalid_argument("choice_probs_3alt: need J = 2");
  const double s2sq = sigma(1, 1);
  const double s2 = std::sqrt(s2sq);
  const double s12 = sigma(0, 1);
  const double s = std::sqrt(1.0 + s2sq - 2.0 * s12);
  return {bvn_cdf(-mu1, -mu2 / s2, s12 / s2), bvn_cdf(mu1, (mu1 - mu2) / s, (1.0 - s12) / s),
          bvn_cdf(mu2 / s2, (mu2 - mu1) / s, (s2sq - s12) / (s2 * s))};
}

inline std::array<double, 3> choice_probs_3alt(const ThetaParams& theta, const Eigen::VectorXd& w1,
                                               const Eigen::VectorXd& w2) {
  const Eigen::VectorXd coef = theta.coefficients();
  return choice_probs_3alt(w1.dot(coef), w2.dot(coef), theta.sigma);
}

/// Selection matrix A with {choice c} = {A U < 0} for utilities U (J-vector,
/// baseline utility 0).
inline Eigen::MatrixXd choice_contrast(int choice, int num_alternatives) {
  const int J = num_alternatives;
  if (choice == 0) return Eigen::MatrixXd::Identity(J, J);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(J, J);
  int row = 0;
  a(row++, choice - 1) = -1.0;
  for (int k = 1; k <= J; ++k) {
    if (k == choice) continue;
    a(row, k - 1) = 1.0;
    a(row, choice - 1) = -1.0;
    ++row;
  }
  return a;
}

struct GhkEstimate {
  Eigen::VectorXd probabilities;  ///< over 0..J, renormalised to sum to 1
  double raw_sum = 0.0;           ///< sum before renormalisation
};

/*! \brief GHK simulator for the choice probabilities of utilities
    N(mu, sigma) against a zero baseline.

    Each probability P(A_c U < 0) is estimated with m recursive
    importance-sampling draws on the Cholesky factor of A_c sigma A_c^T.
*/
inline GhkEstimate choice_probs_ghk(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, int m,
                                    RandomStream& rng) {
  const auto J = static_cast<int>(mu.size());
  if (m < 1) throw std::invalid_argument("choice_probs_ghk: m must be positive");
  GhkEstimate out;
  out.probabilities.resize(J + 1);
  std::vector<double> eta(static_cast<std::size_t>(J));
  for (int c = 0; c <= J; ++c) {
    const Eigen::MatrixXd a = choice_contrast(c, J);
    const Eigen::VectorXd mean = a * mu;
    const Eigen::MatrixXd l = cholesky(Eigen::MatrixXd(a * sigma * a.transpose()));
    double total = 0.0;
    for (int r = 0; r < m; ++r) {
      double weight = 1.0;
      for (int t = 0; t < J; ++t) {
        double shift = mean(t);
        for (int s = 0; s < t; ++s) shift += l(t, s) * eta[static_cast<std::size_t>(s)];
        const double p = normal_cdf(-shift / l(t, t));
        weight *= p;
        if (weight <= 0.0) break;
        if (t + 1 < J) {
          const double q = normal_quantile(rng.uniform() * p);
          eta[static_cast<std::size_t>(t)] = std::isfinite(q) ? q : -shift / l(t, t);
        }
      }
      total += weight;
    }
    out.probabilities(c) = total / m;
  }
  out.raw_sum = out.probabilities.sum();
  if (out.raw_sum > 0.0) out.probabilities /= out.raw_sum;
  return out;
}

inline GhkEstimate choice_probs_ghk(const ThetaParams& theta, const Eigen::MatrixXd& w_block, int m,
                                    RandomStream& rng) {
  return choice_probs_ghk(Eigen::VectorXd(w_block * theta.coefficients()), theta.sigma, m, rng);
}

struct ProbabilityEngine {
  enum class Kind { ClosedForm, Ghk };
  Kind kind = Kind::ClosedForm;
  int draws = 1000;        ///< GHK only
  std::uint64_t seed = 0;  ///< GHK uses stream (seed, i) for observation i

  static ProbabilityEngine closed_form() { return {}; }
  static ProbabilityEngine ghk(int m, std::uint64_t seed) { return {Kind::Ghk, m, seed}; }
};

inline constexpr double kProbabilityFloor = 1e-12;

/// Sum over observations of log P(C_i | W_i; theta), probabilities floored
/// at 1e-12. Terms are reduced in observation order for any thread count.
inline double log_likelihood(const MnpDataset& data, const ThetaParams& theta,
                             const ProbabilityEngine& engine = ProbabilityEngine::closed_form(),
                             unsigned threads = 1) {
  const int J = data.num_alternatives;
  if (engine.kind == ProbabilityEngine::Kind::ClosedForm && J != 2) {
    throw std::invalid_argument("closed-form probabilities need J = 2");
  }
  const Eigen::VectorXd coef = theta.coefficients();
  if (coef.size() != data.num_covariates) throw std::invalid_argument("coefficient count mismatch");
  std::vector<double> terms(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    double p = 0.0;
    const int c = data.choice[i];
    if (engine.kind == ProbabilityEngine::Kind::ClosedForm) {
      const Eigen::Map<const Eigen::VectorXd> w1(data.row(i, 1), data.num_covariates);
      const Eigen::Map<const Eigen::VectorXd> w2(data.row(i, 2), data.num_covariates);
      p = choice_probs_3alt(w1.dot(coef), w2.dot(coef), theta.sigma)[static_cast<std::size_t>(c)];
    } else {
      RandomStream rng(engine.seed, i);
      p = choice_probs_ghk(theta, data.block(i), engine.draws, rng).probabilities(c);
    }
    terms[i] = std::log(std::max(p, kProbabilityFloor));
  });
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

struct MleResult {
  ThetaParams theta;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;  ///< false when the iteration cap was hit; theta is then the best point found
};

/// Likelihood-based second-stage estimator for three alternatives with the
/// error covariance held at start.sigma; Nelder-Mead over the coefficients.
inline MleResult two_stage_mle_3alt(const MnpDataset& data, const ThetaParams& start,
                                    const NelderMeadOptions& options = {}) {
  if (data.num_alternatives != 2) throw std::invalid_argument("two_stage_mle_3alt: need J = 2");
  start.validate(2);
  const Eigen::MatrixXd sigma = start.sigma;
  auto objective = [&](const Eigen::VectorXd& coef) {
    return -log_likelihood(data, ThetaParams::from_coefficients(coef, sigma));
  };
  const NelderMeadResult nm = nelder_mead(objective, start.coefficients(), options);
  MleResult out;
  out.theta = ThetaParams::from_coefficients(nm.minimizer, sigma);
  out.log_likelihood = -nm.value;
  out.iterations = nm.iterations;
  out.converged = nm.converged;
  return out;
}

}  // namespace qbcf

#endif  // QBCF_PROBIT_ORACLE_HPP

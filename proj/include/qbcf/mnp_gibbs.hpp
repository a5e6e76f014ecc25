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

#ifndef QBCF_MNP_GIBBS_HPP
#define QBCF_MNP_GIBBS_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qbcf/dataset.hpp"
#include "qbcf/error.hpp"
#include "qbcf/linalg.hpp"
#include "qbcf/quantile.hpp"
#include "qbcf/random_stream.hpp"
#include "qbcf/samplers.hpp"

namespace qbcf {

/*! \brief Gaussian prior on the coefficients and Wishart prior on the error
    precision, Sigma^{-1} ~ Wishart(dof, (dof * scale)^{-1}).

    The coefficient prior applies to the working-scale coefficients of the
    marginal augmentation sampler (see run_gibbs). A zero beta_covariance
    encodes a dogmatic prior at beta_mean.
*/
struct PriorSpec {
  Eigen::VectorXd beta_mean;
  Eigen::MatrixXd beta_covariance;
  bool flat_beta = true;
  double wishart_dof = 0.0;
  Eigen::MatrixXd wishart_scale;

  /// Flat coefficient prior, dof = J + 1, scale = I.
  static PriorSpec default_for(int num_alternatives, int num_covariates) {
    PriorSpec prior;
    prior.beta_mean = Eigen::VectorXd::Zero(num_covariates);
    prior.beta_covariance = Eigen::MatrixXd::Zero(num_covariates, num_covariates);
    prior.flat_beta = true;
    prior.wishart_dof = num_alternatives + 1.0;
    prior.wishart_scale = Eigen::MatrixXd::Identity(num_alternatives, num_alternatives);
    return prior;
  }

  bool dogmatic() const { return !flat_beta && beta_covariance.isZero(0.0); }

  void validate(int num_alternatives, int num_covariates) const {
    if (beta_mean.size() != num_covariates) throw std::invalid_argument("prior mean has wrong size");
    if (!flat_beta && (beta_covariance.rows() != num_covariates || beta_covariance.cols() != num_covariates)) {
      throw std::invalid_argument("prior covariance has wrong size");
    }
    if (!flat_beta && !dogmatic()) (void)cholesky(beta_covariance);
    if (wishart_dof < num_alternatives) throw std::invalid_argument("wishart dof must be >= J");
    if (wishart_scale.rows() != num_alternatives || wishart_scale.cols() != num_alternatives) {
      throw std::invalid_argument("wishart scale has wrong size");
    }
    (void)cholesky(wishart_scale);
  }
};

struct GibbsConfig {
  int burn_in = 2000;
  int keep = 2000;
  int thin = 1;
  RandomStream rng{0, 0};
  /// When set, Sigma is held at this matrix (first diagonal element must be 1).
  std::optional<Eigen::MatrixXd> fixed_sigma;
  /// Verify the decision rule on every latent vector after each sweep.
  bool check_consistency = true;
};

/// Current position of the chain on the identified scale.
struct GibbsState {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> latents;  ///< n x J
  Eigen::VectorXd beta;
  Eigen::MatrixXd sigma;
  double working_scale = 1.0;  ///< sqrt of the unnormalised sigma_11 of the last draw
};

struct PosteriorDraws {
  std::vector<std::string> names;
  Eigen::MatrixXd theta;  ///< keep x (p + free Sigma entries)
  std::size_t sweeps = 0;
  std::size_t consistency_checks = 0;
  std::vector<std::string> warnings;
};

/// Names of the stored parameters: coefficients then the upper triangle of
/// Sigma without sigma_11 (sigma_1_2, ..., sigma_J_J).
inline std::vector<std::string> parameter_names(const MnpDataset& data) {
  std::vector<std::string> names = data.coefficient_names;
  for (int k = static_cast<int>(names.size()); k < data.num_covariates; ++k) {
    names.push_back("beta_" + std::to_string(k + 1));
  }
  for (int a = 1; a <= data.num_alternatives; ++a) {
    for (int b = a; b <= data.num_alternatives; ++b) {
      if (a == 1 && b == 1) continue;
      names.push_back("sigma_" + std::to_string(a) + "_" + std::to_string(b));
    }
  }
  return names;
}

/*! \brief Interval for the latent utility of alternative j (1..J) implied by
    the observed choice with the other utilities held fixed.

    utilities[k - 1] is the current utility of alternative k.
*/
inline std::pair<double, double> truncation_region(int choice, int j, std::span<const double> utilities) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int J = static_cast<int>(utilities.size());
  if (choice < 0 || choice > J || j < 1 || j > J) throw std::invalid_argument("truncation_region: bad index");
  if (choice == 0) return {-inf, 0.0};
  if (choice == j) {
    double lower = 0.0;
    for (int k = 1; k <= J; ++k) {
      if (k != j) lower = std::max(lower, utilities[static_cast<std::size_t>(k - 1)]);
    }
    return {lower, inf};
  }
  return {-inf, utilities[static_cast<std::size_t>(choice - 1)]};
}

/// True when the utility vector reproduces the observed choice.
inline bool choice_consistent(int choice, std::span<const double> utilities) {
  if (choice == 0) {
    for (double u : utilities) {
      if (!(u < 0.0)) return false;
    }
    return true;
  }
  const double chosen = utilities[static_cast<std::size_t>(choice - 1)];
  if (!(chosen > 0.0)) return false;
  for (std::size_t k = 0; k < utilities.size(); ++k) {
    if (static_cast<int>(k) + 1 != choice && !(utilities[k] < chosen)) return false;
  }
  return true;
}

namespace detail {

inline void mean_utilities(const MnpDataset& data, std::size_t i, const Eigen::VectorXd& beta, double* mu) {
  const int p = data.num_covariates;
  for (int j = 1; j <= data.num_alternatives; ++j) {
    const double* w = data.row(i, j);
    double s = 0.0;
    for (int k = 0; k < p; ++k) s += w[k] * beta(k);
    mu[j - 1] = s;
  }
}

}  // namespace detail

/*! \brief One latent-utility sweep: for i ascending and j ascending, draw
    U_ij from its normal conditional given the other coordinates, truncated
    to truncation_region.
*/
template <typename Latents>
void gibbs_step_latents(Latents& latents, const MnpDataset& data, const Eigen::VectorXd& beta,
                        const Eigen::MatrixXd& sigma, RandomStream& rng) {
  const int J = data.num_alternatives;
  const Eigen::MatrixXd precision = spd_inverse(sigma);
  std::vector<double> cond_sd(static_cast<std::size_t>(J));
  Eigen::MatrixXd coef(J, J);  // P_jk / P_jj
  for (int j = 0; j < J; ++j) {
    cond_sd[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(precision(j, j));
    for (int k = 0; k < J; ++k) coef(j, k) = precision(j, k) / precision(j, j);
  }
  std::vector<double> mu(static_cast<std::size_t>(J));
  std::vector<double> u(static_cast<std::size_t>(J));
  for (std::size_t i = 0; i < data.size(); ++i) {
    detail::mean_utilities(data, i, beta, mu.data());
    const auto r = static_cast<Eigen::Index>(i);
    for (int k = 0; k < J; ++k) u[static_cast<std::size_t>(k)] = latents(r, k);
    for (int j = 0; j < J; ++j) {
      double m = mu[static_cast<std::size_t>(j)];
      for (int k = 0; k < J; ++k) {
        if (k != j) m -= coef(j, k) * (u[static_cast<std::size_t>(k)] - mu[static_cast<std::size_t>(k)]);
      }
      const auto [lo, hi] = truncation_region(data.choice[i], j + 1, u);
      u[static_cast<std::size_t>(j)] = sample_truncated_normal(m, cond_sd[static_cast<std::size_t>(j)], lo, hi, rng);
    }
    for (int k = 0; k < J; ++k) latents(r, k) = u[static_cast<std::size_t>(k)];
  }
}

/// Sufficient statistics M_jk = sum_i W_ij W_ik^T reused by every beta draw.
struct DesignCrossProducts {
  std::vector<Eigen::MatrixXd> blocks;  ///< index j * J + k
  int num_alternatives = 0;

  static DesignCrossProducts from(const MnpDataset& data) {
    const int J = data.num_alternatives;
    const int p = data.num_covariates;
    DesignCrossProducts out;
    out.num_alternatives = J;
    out.blocks.assign(static_cast<std::size_t>(J * J), Eigen::MatrixXd::Zero(p, p));
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (int j = 1; j <= J; ++j) {
        const Eigen::Map<const Eigen::VectorXd> wj(data.row(i, j), p);
        for (int k = 1; k <= J; ++k) {
          const Eigen::Map<const Eigen::VectorXd> wk(data.row(i, k), p);
          out.blocks[static_cast<std::size_t>((j - 1) * J + (k - 1))].noalias() += wj * wk.transpose();
        }
      }
    }
    return out;
  }
};

/*! \brief Conjugate coefficient draw given latent utilities and Sigma.

    Draws from N(m, V) with V = (V_b^{-1} + sum_i W_i^T Sigma^{-1} W_i)^{-1} and
    m = V (V_b^{-1} mu_b + sum_i W_i^T Sigma^{-1} U_i); a flat prior drops the
    V_b terms and a dogmatic prior returns mu_b.
*/
template <typename Latents>
Eigen::VectorXd gibbs_step_beta(const Latents& latents, const MnpDataset& data, const PriorSpec& prior,
                                const Eigen::MatrixXd& sigma, RandomStream& rng,
                                const DesignCrossProducts* cross = nullptr) {
  const int J = data.num_alternatives;
  const int p = data.num_covariates;
  if (prior.dogmatic()) return prior.beta_mean;
  const Eigen::MatrixXd precision = spd_inverse(sigma);

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(p, p);
  if (cross != nullptr) {
    for (int j = 0; j < J; ++j) {
      for (int k = 0; k < J; ++k) q.noalias() += precision(j, k) * cross->blocks[static_cast<std::size_t>(j * J + k)];
    }
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Eigen::MatrixXd w = data.block(i);
      q.noalias() += w.transpose() * precision * w;
    }
  }
  // b = sum_i W_i^T P U_i
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  std::vector<double> pu(static_cast<std::size_t>(J));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int j = 0; j < J; ++j) {
      double s = 0.0;
      for (int k = 0; k < J; ++k) s += precision(j, k) * latents(r, k);
      pu[static_cast<std::size_t>(j)] = s;
    }
    for (int j = 1; j <= J; ++j) {
      const double* w = data.row(i, j);
      const double f = pu[static_cast<std::size_t>(j - 1)];
      for (int k = 0; k < p; ++k) b(k) += w[k] * f;
    }
  }
  if (!prior.flat_beta) {
    const Eigen::MatrixXd prior_precision = spd_inverse(prior.beta_covariance);
    q += prior_precision;
    b += prior_precision * prior.beta_mean;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (q + q.transpose()));
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("coefficient precision is singular (collinear regressors?)");
  }
  const Eigen::VectorXd mean = llt.solve(b);
  Eigen::VectorXd z(p);
  for (int k = 0; k < p; ++k) z(k) = rng.normal();
  // L L^T = Q, so L^{-T} z has covariance Q^{-1}.
  return mean + llt.matrixU().solve(z);
}

/*! \brief Unconstrained conjugate covariance draw followed by the sigma_11 = 1
    normalisation.

    Draws Sigma~^{-1} ~ Wishart(dof + n, (dof * scale + sum_i e_i e_i^T)^{-1})
    with e_i = U_i - W_i beta on the working scale, then sets
    Sigma = Sigma~ / sigma~_11 and divides beta and the latents by
    sqrt(sigma~_11) in place. Returns the normalised Sigma.
*/
template <typename Latents>
Eigen::MatrixXd gibbs_step_sigma(Latents& latents, const MnpDataset& data, Eigen::VectorXd& beta,
                                 const PriorSpec& prior, RandomStream& rng, double* working_scale = nullptr) {
  const int J = data.num_alternatives;
  Eigen::MatrixXd scatter = prior.wishart_dof * prior.wishart_scale;
  std::vector<double> mu(static_cast<std::size_t>(J));
  std::vector<double> e(static_cast<std::size_t>(J));
  for (std::size_t i = 0; i < data.size(); ++i) {
    detail::mean_utilities(data, i, beta, mu.data());
    const auto r = static_cast<Eigen::Index>(i);
    for (int j = 0; j < J; ++j) e[static_cast<std::size_t>(j)] = latents(r, j) - mu[static_cast<std::size_t>(j)];
    for (int j = 0; j < J; ++j) {
      for (int k = 0; k <= j; ++k) scatter(j, k) += e[static_cast<std::size_t>(j)] * e[static_cast<std::size_t>(k)];
    }
  }
  for (int j = 0; j < J; ++j) {
    for (int k = j + 1; k < J; ++k) scatter(j, k) = scatter(k, j);
  }
  const CovarianceMatrix posterior_scale(spd_inverse(scatter));
  const CovarianceMatrix draw =
      sample_wishart(prior.wishart_dof + static_cast<double>(data.size()), posterior_scale, rng);
  const Eigen::MatrixXd unconstrained = spd_inverse(draw.matrix());
  const double s11 = unconstrained(0, 0);
  const double scale = std::sqrt(s11);
  Eigen::MatrixXd sigma = unconstrained / s11;
  sigma(0, 0) = 1.0;
  sigma = 0.5 * (sigma + sigma.transpose());
  beta /= scale;
  latents /= scale;
  if (working_scale != nullptr) *working_scale = scale;
  return sigma;
}

/// Stored parameter vector for the current state.
inline Eigen::VectorXd state_parameters(const GibbsState& state) {
  const auto J = state.sigma.rows();
  const auto p = state.beta.size();
  Eigen::VectorXd theta(p + J * (J + 1) / 2 - 1);
  theta.head(p) = state.beta;
  Eigen::Index pos = p;
  for (Eigen::Index a = 0; a < J; ++a) {
    for (Eigen::Index b = a; b < J; ++b) {
      if (a == 0 && b == 0) continue;
      theta(pos++) = state.sigma(a, b);
    }
  }
  return theta;
}

/// Cold start: beta = 0, Sigma = I (or the fixed Sigma) and one latent sweep from zero utilities.
inline GibbsState initial_state(const MnpDataset& data, const GibbsConfig& config, RandomStream& rng) {
  GibbsState state;
  const int J = data.num_alternatives;
  state.latents.setZero(static_cast<Eigen::Index>(data.size()), J);
  state.beta = Eigen::VectorXd::Zero(data.num_covariates);
  state.sigma = config.fixed_sigma ? *config.fixed_sigma : Eigen::MatrixXd::Identity(J, J);
  gibbs_step_latents(state.latents, data, state.beta, state.sigma, rng);
  return state;
}

inline std::size_t count_inconsistent(const GibbsState& state, const MnpDataset& data) {
  std::size_t bad = 0;
  const int J = data.num_alternatives;
  std::vector<double> u(static_cast<std::size_t>(J));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int k = 0; k < J; ++k) u[static_cast<std::size_t>(k)] = state.latents(static_cast<Eigen::Index>(i), k);
    if (!choice_consistent(data.choice[i], u)) ++bad;
  }
  return bad;
}

/*! \brief One full sweep of the data-augmentation sampler.

    With Sigma estimated the sweep follows the marginal-augmentation scheme:
    the identified latents are drawn given (beta, Sigma); with a flat
    coefficient prior the working scale alpha^2 is redrawn from its
    conditional tr(dof * scale * Sigma^{-1}) / chi^2_{dof J - p}; the
    coefficients and the unconstrained covariance are drawn on the
    alpha-expanded scale; the state is then renormalised to sigma_11 = 1.
*/
inline void gibbs_sweep(GibbsState& state, const MnpDataset& data, const PriorSpec& prior,
                        const GibbsConfig& config, const DesignCrossProducts& cross, RandomStream& rng) {
  const int J = data.num_alternatives;
  const int p = data.num_covariates;
  gibbs_step_latents(state.latents, data, state.beta, state.sigma, rng);
  if (config.fixed_sigma || J == 1) {
    state.beta = gibbs_step_beta(state.latents, data, prior, state.sigma, rng, &cross);
    return;
  }
  const double working_dof = prior.wishart_dof * J - p;
  if (prior.flat_beta && working_dof > 0.0) {
    const Eigen::MatrixXd sigma_inv = spd_inverse(state.sigma);
    const double trace = (prior.wishart_dof * prior.wishart_scale * sigma_inv).trace();
    state.working_scale = std::sqrt(trace / rng.chi_squared(working_dof));
  }
  const double alpha = state.working_scale;
  state.latents *= alpha;
  const Eigen::MatrixXd expanded_sigma = alpha * alpha * state.sigma;
  state.beta = gibbs_step_beta(state.latents, data, prior, expanded_sigma, rng, &cross);
  state.sigma = gibbs_step_sigma(state.latents, data, state.beta, prior, rng, &state.working_scale);
}

/*! \brief Quasi-posterior sampling for the second-stage probit.

    Runs burn_in sweeps, then keep * thin sweeps storing every thin-th state.
    Deterministic given config.rng. Alternatives that are never chosen are
    reported in PosteriorDraws::warnings rather than treated as failures.
*/
inline PosteriorDraws run_gibbs(const MnpDataset& data, const PriorSpec& prior, const GibbsConfig& config) {
  const std::vector<std::string> warnings = data.validate();
  prior.validate(data.num_alternatives, data.num_covariates);
  if (config.burn_in < 0 || config.keep < 1 || config.thin < 1) {
    throw std::invalid_argument("run_gibbs: need burn_in >= 0, keep >= 1, thin >= 1");
  }
  if (config.fixed_sigma) {
    const auto& s = *config.fixed_sigma;
    if (s.rows() != data.num_alternatives || s.cols() != data.num_alternatives || s(0, 0) != 1.0) {
      throw std::invalid_argument("fixed sigma must be J x J with sigma_11 = 1");
    }
    (void)cholesky(s);
  }
  RandomStream rng = config.rng;
  const DesignCrossProducts cross = DesignCrossProducts::from(data);
  GibbsState state = initial_state(data, config, rng);

  PosteriorDraws draws;
  draws.names = parameter_names(data);
  draws.warnings = warnings;
  if (config.keep < 100) draws.warnings.push_back("keep < 100: too few draws for inference");
  draws.theta.resize(config.keep, static_cast<Eigen::Index>(draws.names.size()));

  auto sweep = [&] {
    gibbs_sweep(state, data, prior, config, cross, rng);
    ++draws.sweeps;
    if (config.check_consistency) {
      ++draws.consistency_checks;
      if (const std::size_t bad = count_inconsistent(state, data); bad != 0) {
        throw std::logic_error("latent utilities inconsistent with choices for " + std::to_string(bad) +
                               " observations");
      }
    }
  };
  for (int s = 0; s < config.burn_in; ++s) sweep();
  for (int kept = 0; kept < config.keep; ++kept) {
    for (int t = 0; t < config.thin; ++t) sweep();
    draws.theta.row(kept) = state_parameters(state).transpose();
  }
  return draws;
}

struct PosteriorSummary {
  std::vector<std::string> names;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  ///< (1/S) sum (theta_s - mean)(theta_s - mean)^T
  Eigen::VectorXd sd;
  std::vector<double> levels;
  std::vector<std::vector<Interval>> intervals;  ///< [level][coordinate]
};

/// Draw mean, draw covariance and equal-tailed credible intervals.
inline PosteriorSummary summarize(const PosteriorDraws& draws, const std::vector<double>& levels) {
  const Eigen::Index s = draws.theta.rows();
  if (s < 2) throw std::invalid_argument("summarize: need at least two draws");
  PosteriorSummary out;
  out.names = draws.names;
  out.levels = levels;
  out.mean = draws.theta.colwise().mean().transpose();
  const Eigen::MatrixXd centred = draws.theta.rowwise() - out.mean.transpose();
  out.covariance = (centred.transpose() * centred) / static_cast<double>(s);
  out.sd = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.intervals.resize(levels.size());
  std::vector<double> column(static_cast<std::size_t>(s));
  for (std::size_t l = 0; l < levels.size(); ++l) {
    for (Eigen::Index c = 0; c < draws.theta.cols(); ++c) {
      for (Eigen::Index r = 0; r < s; ++r) column[static_cast<std::size_t>(r)] = draws.theta(r, c);
      out.intervals[l].push_back(equal_tailed_interval(column, levels[l]));
    }
  }
  return out;
}

}  // namespace qbcf

#endif  // QBCF_MNP_GIBBS_HPP

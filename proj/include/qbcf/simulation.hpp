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

#ifndef QBCF_SIMULATION_HPP
#define QBCF_SIMULATION_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbcf/bootstrap.hpp"
#include "qbcf/dataset.hpp"
#include "qbcf/error.hpp"
#include "qbcf/format.hpp"
#include "qbcf/linalg.hpp"
#include "qbcf/mnp_gibbs.hpp"
#include "qbcf/parallel.hpp"
#include "qbcf/quantile.hpp"
#include "qbcf/quasi_bayes.hpp"
#include "qbcf/random_stream.hpp"

namespace qbcf {

enum class Design { I, II };

/// First-stage regression function. Design I reads the last term as
/// log((z + 1)^2) and is singular at z = -1.
inline double tau(Design design, double z) {
  if (design == Design::I) {
    if (z == -1.0) throw SingularPoint("tau(-1) is undefined in design I");
    return 0.9 * z + 0.9 * z * z + std::log((z + 1.0) * (z + 1.0));
  }
  return 0.9 * z + 0.9 * z * z + std::exp(0.9 * z);
}

/*! \brief Simulation design.

    X_e(i, j) = tau(xi_ij) + v_ij with xi, v independent N(0, 1); utilities
    U_ij = beta_tilde X_e(i, j) + lambda v_ij + eps_ij for j = 0..J with
    eps ~ N(0, Omega), Var eps_0 = 1, Var eps_j = sigma2 and correlation
    rho = sqrt(sigma2) / 2 on every pair (J = 2) or on the pairs (0,1) and
    (2,3) only (J = 3). The instrument of alternative j is xi_ij.
*/
struct DgpSpec {
  Design design = Design::I;
  int num_alternatives = 2;
  std::size_t n = 500;
  double beta_tilde = 1.0;
  double lambda = 0.6;
  double sigma2 = 0.75;

  Eigen::MatrixXd epsilon_covariance() const {
    const int J = num_alternatives;
    if (J != 2 && J != 3) throw std::invalid_argument("simulation designs have J = 2 or J = 3");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    const double sd = std::sqrt(sigma2);
    const double rho = sd / 2.0;
    Eigen::VectorXd sds = Eigen::VectorXd::Constant(J + 1, sd);
    sds(0) = 1.0;
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(J + 1, J + 1);
    for (int a = 0; a <= J; ++a) {
      for (int b = 0; b <= J; ++b) {
        if (a == b) continue;
        const bool paired = J == 2 || (a / 2 == b / 2);
        if (paired) corr(a, b) = rho;
      }
    }
    Eigen::MatrixXd omega = sds.asDiagonal() * corr * sds.asDiagonal();
    if (!is_positive_definite(omega)) throw NotPositiveDefinite("simulation error covariance");
    return omega;
  }

  /// Covariance of eps_j - eps_0, j = 1..J.
  Eigen::MatrixXd differenced_covariance() const {
    const int J = num_alternatives;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(J, J + 1);
    d.col(0).setConstant(-1.0);
    d.rightCols(J).setIdentity();
    return d * epsilon_covariance() * d.transpose();
  }

  void validate() const {
    (void)epsilon_covariance();
    if (n < 1) throw std::invalid_argument("n must be positive");
  }
};

/// Identified true parameters: coefficients and Sigma on the sigma_11 = 1 scale.
struct TrueParameters {
  double beta_tilde = 0.0;
  double lambda = 0.0;
  Eigen::MatrixXd sigma;

  /// Same order as parameter_names().
  Eigen::VectorXd theta() const {
    GibbsState s;
    s.beta = Eigen::Vector2d(beta_tilde, lambda);
    s.sigma = sigma;
    return state_parameters(s);
  }
};

inline TrueParameters true_parameters(const DgpSpec& spec) {
  const Eigen::MatrixXd sd = spec.differenced_covariance();
  const double scale = std::sqrt(sd(0, 0));
  TrueParameters out;
  out.beta_tilde = spec.beta_tilde / scale;
  out.lambda = spec.lambda / scale;
  out.sigma = sd / sd(0, 0);
  out.sigma(0, 0) = 1.0;
  return out;
}

struct SimulatedData {
  ChoiceDataset data;
  Eigen::MatrixXd utilities_dagger;  ///< n x J, U_ij - U_i0
};

/// Draws per observation, in order: xi (J + 1), v (J + 1), eps (J + 1).
inline SimulatedData generate_dataset(const DgpSpec& spec, RandomStream& rng) {
  spec.validate();
  const int J = spec.num_alternatives;
  const auto n = static_cast<Eigen::Index>(spec.n);
  const Eigen::MatrixXd chol = cholesky(spec.epsilon_covariance());
  SimulatedData out;
  ChoiceDataset& d = out.data;
  d.num_alternatives = J;
  d.id.resize(spec.n);
  d.choice.resize(spec.n);
  d.x_e.resize(n, J + 1);
  d.z.assign(static_cast<std::size_t>(J + 1), Eigen::MatrixXd(n, 1));
  d.v_true = Eigen::MatrixXd(n, J + 1);
  out.utilities_dagger.resize(n, J);
  Eigen::VectorXd xi(J + 1), v(J + 1), e(J + 1), u(J + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j <= J; ++j) {
      do {
        xi(j) = rng.normal();
      } while (spec.design == Design::I && xi(j) == -1.0);
    }
    for (int j = 0; j <= J; ++j) v(j) = rng.normal();
    for (int j = 0; j <= J; ++j) e(j) = rng.normal();
    const Eigen::VectorXd eps = chol * e;
    int best = 0;
    for (int j = 0; j <= J; ++j) {
      const double x = tau(spec.design, xi(j)) + v(j);
      d.x_e(i, j) = x;
      d.z[static_cast<std::size_t>(j)](i, 0) = xi(j);
      (*d.v_true)(i, j) = v(j);
      u(j) = spec.beta_tilde * x + spec.lambda * v(j) + eps(j);
      if (u(j) > u(best)) best = j;
    }
    for (int j = 1; j <= J; ++j) out.utilities_dagger(i, j - 1) = u(j) - u(0);
    d.id[static_cast<std::size_t>(i)] = i + 1;
    d.choice[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

enum class Method { Qb, Qbb, QbbT, Qbb1 };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Qb:
      return "QB";
    case Method::Qbb:
      return "QBB";
    case Method::QbbT:
      return "QBB-t";
    case Method::Qbb1:
      return "QBB1";
  }
  return "?";
}

inline std::optional<Method> parse_method(const std::string& s) {
  for (Method m : {Method::Qb, Method::Qbb, Method::QbbT, Method::Qbb1}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

struct CoverageConfig {
  DgpSpec spec;
  int reps = 200;
  std::vector<Method> methods = {Method::Qb, Method::Qbb, Method::QbbT, Method::Qbb1};
  std::vector<double> levels = {0.90, 0.95, 0.99};
  int bootstrap_replications = 100;
  EstimationConfig estimation;  ///< keep = S draws per chain
  std::size_t min_interval_replications = kMinIntervalReplications;
  double bootstrap_max_failure_share = 0.10;
  unsigned threads = 1;  ///< Monte Carlo replications run in parallel
};

/// Intervals of one Monte Carlo replication, indexed [method][level].
struct ReplicationOutcome {
  std::size_t index = 0;
  bool ok = false;
  std::string message;
  std::vector<std::vector<Interval>> intervals;
  std::size_t bootstrap_failures = 0;
};

struct CoverageCell {
  Method method = Method::Qb;
  double level = 0.0;
  double coverage = 0.0;
  double avg_length = 0.0;
  std::size_t reps = 0;
};

struct CoverageReport {
  std::vector<Method> methods;
  std::vector<double> levels;
  std::vector<CoverageCell> cells;  ///< method-major, in methods x levels order
  std::vector<ReplicationOutcome> replications;
  std::size_t effective_reps = 0;
  double runtime_seconds = 0.0;  ///< wall clock; not written to report files

  const CoverageCell& cell(Method m, double level) const {
    for (const auto& c : cells) {
      if (c.method == m && std::abs(c.level - level) < 1e-12) return c;
    }
    throw std::out_of_range("no coverage cell for this method and level");
  }

  void write_csv(std::ostream& os) const {
    os << "method,level,coverage,avg_length,reps\n";
    for (const auto& c : cells) {
      os << to_string(c.method) << ',' << format_double(c.level) << ',' << format_double(c.coverage) << ','
         << format_double(c.avg_length) << ',' << c.reps << '\n';
    }
  }

  /// One row per replication, method and level.
  void write_replications_csv(std::ostream& os) const {
    os << "rep,status,method,level,lower,upper\n";
    for (const auto& r : replications) {
      if (!r.ok) {
        os << r.index << ",failed,,,,\n";
        continue;
      }
      for (std::size_t m = 0; m < methods.size(); ++m) {
        for (std::size_t l = 0; l < levels.size(); ++l) {
          os << r.index << ",ok," << to_string(methods[m]) << ',' << format_double(levels[l]) << ','
             << format_double(r.intervals[m][l].lower) << ',' << format_double(r.intervals[m][l].upper) << '\n';
        }
      }
    }
  }

  /// Methods down, nominal levels across; cells show coverage and average length.
  std::string table() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    os << std::left << std::setw(8) << "method";
    for (double l : levels) {
      std::ostringstream head;
      head << std::fixed << std::setprecision(2) << l;
      os << std::right << std::setw(20) << head.str();
    }
    os << '\n';
    for (std::size_t m = 0; m < methods.size(); ++m) {
      os << std::left << std::setw(8) << to_string(methods[m]);
      for (double l : levels) {
        const auto& c = cell(methods[m], l);
        std::ostringstream entry;
        entry << std::fixed << std::setprecision(3) << c.coverage << " (" << c.avg_length << ")";
        os << std::right << std::setw(20) << entry.str();
      }
      os << '\n';
    }
    os << "coverage (average length) for beta_tilde over " << effective_reps << " replications\n";
    return os.str();
  }
};

namespace detail {

inline bool wants(const std::vector<Method>& methods, Method m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

inline ReplicationOutcome coverage_replication(const CoverageConfig& config, const RandomStream& rng, std::size_t r,
                                               unsigned inner_threads) {
  ReplicationOutcome out;
  out.index = r;
  const RandomStream rep_rng(rng.child_seed(), r);
  try {
    RandomStream data_rng = rep_rng.derive(0);
    const ChoiceDataset data = generate_dataset(config.spec, data_rng).data;
    EstimationConfig est = config.estimation;
    est.threads = inner_threads;
    const QuasiBayesFit fit = fit_quasi_bayes(data, est, rep_rng.derive(1));
    const PosteriorSummary qb = summarize(fit.draws, config.levels);

    const bool need_qbb = wants(config.methods, Method::Qbb) || wants(config.methods, Method::QbbT);
    const bool need_boot = need_qbb || wants(config.methods, Method::Qbb1);
    BootstrapRun boot;
    if (need_boot) {
      BootstrapConfig bc;
      bc.replications = config.bootstrap_replications;
      bc.variant = need_qbb ? BootstrapVariant::Qbb : BootstrapVariant::Qbb1;
      bc.base_rng = rep_rng.derive(2);
      bc.estimation = est;
      bc.max_failure_share = config.bootstrap_max_failure_share;
      bc.threads = inner_threads;
      boot = run_bootstrap(data, bc);
      out.bootstrap_failures = boot.replications.size() - boot.successes();
    }
    out.intervals.resize(config.methods.size());
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      for (std::size_t l = 0; l < config.levels.size(); ++l) {
        const double level = config.levels[l];
        const double alpha = 1.0 - level;
        Interval iv;
        switch (config.methods[m]) {
          case Method::Qb:
            iv = qb.intervals[l][0];
            break;
          case Method::Qbb:
            iv = percentile_interval(boot, 0, alpha, config.min_interval_replications);
            break;
          case Method::QbbT:
            iv = percentile_t_interval(boot, qb.mean(0), qb.sd(0), 0, alpha, config.min_interval_replications);
            break;
          case Method::Qbb1: {
            const auto draws = boot.first_draws(0);
            if (draws.size() < config.min_interval_replications) {
              throw InsufficientReplications(std::to_string(draws.size()) + " successful bootstrap replications");
            }
            iv = equal_tailed_interval(draws, level);
            break;
          }
        }
        out.intervals[m].push_back(iv);
      }
    }
    out.ok = true;
  } catch (const Error& e) {
    out.message = e.what();
  }
  return out;
}

}  // namespace detail

/*! \brief Monte Carlo coverage of beta_tilde for each method and level.

    Replication r owns the stream (rng.child_seed(), r) and derives from it
    the data stream (0), the full-sample sampler stream (1) and the bootstrap
    base stream (2). Replications run in parallel; results depend only on the
    configuration. Failed replications are logged and excluded.
*/
inline CoverageReport run_coverage_experiment(const CoverageConfig& config, const RandomStream& rng) {
  config.spec.validate();
  if (config.reps < 1) throw std::invalid_argument("coverage experiment needs reps >= 1");
  if (config.methods.empty() || config.levels.empty()) throw std::invalid_argument("no methods or levels");
  const auto start = std::chrono::steady_clock::now();
  const double truth = true_parameters(config.spec).beta_tilde;

  CoverageReport report;
  report.methods = config.methods;
  report.levels = config.levels;
  report.replications.resize(static_cast<std::size_t>(config.reps));
  const unsigned outer = std::max(1u, config.threads);
  const unsigned inner = config.reps == 1 ? outer : 1u;
  parallel_for(report.replications.size(), outer, [&](std::size_t r) {
    report.replications[r] = detail::coverage_replication(config, rng, r, inner);
  });

  for (const auto& r : report.replications) report.effective_reps += r.ok ? 1 : 0;
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    for (std::size_t l = 0; l < config.levels.size(); ++l) {
      CoverageCell c{config.methods[m], config.levels[l], 0.0, 0.0, report.effective_reps};
      for (const auto& r : report.replications) {
        if (!r.ok) continue;
        c.coverage += r.intervals[m][l].contains(truth) ? 1.0 : 0.0;
        c.avg_length += r.intervals[m][l].length();
      }
      if (report.effective_reps > 0) {
        c.coverage /= static_cast<double>(report.effective_reps);
        c.avg_length /= static_cast<double>(report.effective_reps);
      }
      report.cells.push_back(c);
    }
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace qbcf

#endif  // QBCF_SIMULATION_HPP

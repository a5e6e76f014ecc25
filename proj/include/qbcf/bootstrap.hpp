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

#ifndef QBCF_BOOTSTRAP_HPP
#define QBCF_BOOTSTRAP_HPP

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbcf/dataset.hpp"
#include "qbcf/error.hpp"
#include "qbcf/format.hpp"
#include "qbcf/parallel.hpp"
#include "qbcf/quantile.hpp"
#include "qbcf/quasi_bayes.hpp"
#include "qbcf/random_stream.hpp"

namespace qbcf {

/// Row indices of an Efron bootstrap sample: n draws uniform on 0..n-1.
inline std::vector<std::size_t> resample_indices(std::size_t n, RandomStream& rng) {
  if (n == 0) throw std::invalid_argument("resample_indices: empty dataset");
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = rng.index(n);
  return rows;
}

/// Bootstrap sample of whole observation rows (both stages move together).
inline ChoiceDataset resample_rows(const ChoiceDataset& data, RandomStream& rng) {
  const auto rows = resample_indices(data.size(), rng);
  return data.select_rows(rows);
}

enum class BootstrapVariant { Qbb, Qbb1 };

inline const char* to_string(BootstrapVariant v) { return v == BootstrapVariant::Qbb ? "QBB" : "QBB1"; }

/*! \brief Bootstrap settings. estimation.keep is the number of stored draws
    S per replication; the QBB1 variant runs the same burn-in and keeps a
    single draw.
*/
struct BootstrapConfig {
  int replications = 100;
  BootstrapVariant variant = BootstrapVariant::Qbb;
  RandomStream base_rng{0, 0};
  EstimationConfig estimation;
  double max_failure_share = 0.10;
  unsigned threads = 1;  ///< replications run in parallel
};

struct BootstrapReplication {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  bool ok = false;
  std::string message;        ///< failure reason
  Eigen::VectorXd estimate;   ///< posterior mean (QBB) or the single draw (QBB1)
  Eigen::VectorXd std_error;  ///< posterior SD; zero for QBB1
  Eigen::VectorXd first_draw; ///< first stored draw of the chain
};

struct BootstrapRun {
  BootstrapVariant variant = BootstrapVariant::Qbb;
  std::vector<std::string> names;
  std::vector<BootstrapReplication> replications;
  std::vector<std::string> warnings;

  std::size_t successes() const {
    std::size_t k = 0;
    for (const auto& r : replications) k += r.ok ? 1 : 0;
    return k;
  }

  std::vector<double> estimates(std::size_t j) const {
    std::vector<double> out;
    for (const auto& r : replications) {
      if (r.ok) out.push_back(r.estimate(static_cast<Eigen::Index>(j)));
    }
    return out;
  }

  /// First stored draw per replication; for a QBB run these are the QBB1 values
  /// of the same chains.
  std::vector<double> first_draws(std::size_t j) const {
    std::vector<double> out;
    for (const auto& r : replications) {
      if (r.ok) out.push_back(r.first_draw(static_cast<Eigen::Index>(j)));
    }
    return out;
  }

  std::vector<double> std_errors(std::size_t j) const {
    std::vector<double> out;
    for (const auto& r : replications) {
      if (r.ok) out.push_back(r.std_error(static_cast<Eigen::Index>(j)));
    }
    return out;
  }

  /// Columns: b, seed, stream, status, est_<name>..., se_<name>..., message.
  void write_csv(std::ostream& os) const {
    os << "b,seed,stream,status";
    for (const auto& n : names) os << ",est_" << n;
    for (const auto& n : names) os << ",se_" << n;
    os << ",message\n";
    for (const auto& r : replications) {
      os << r.index << ',' << r.seed << ',' << r.stream_id << ',' << (r.ok ? "ok" : "failed");
      for (std::size_t k = 0; k < names.size(); ++k) {
        os << ',' << (r.ok ? format_double(r.estimate(static_cast<Eigen::Index>(k))) : "");
      }
      for (std::size_t k = 0; k < names.size(); ++k) {
        os << ',' << (r.ok ? format_double(r.std_error(static_cast<Eigen::Index>(k))) : "");
      }
      std::string msg = r.message;
      for (char& ch : msg) {
        if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
      }
      os << ',' << msg << '\n';
    }
  }
};

/// One replication: resample, refit the first stage (bandwidth search
/// included) and run the sampler on the bootstrap second stage.
inline BootstrapReplication run_replication(const ChoiceDataset& data, const BootstrapConfig& config, std::size_t b) {
  RandomStream rng = config.base_rng.derive(b);
  BootstrapReplication rep;
  rep.index = b;
  rep.seed = rng.seed();
  rep.stream_id = rng.stream_id();
  try {
    const auto rows = resample_indices(data.size(), rng);
    const ChoiceDataset sample = data.select_rows(rows);
    EstimationConfig est = config.estimation;
    if (config.variant == BootstrapVariant::Qbb1) est.keep = 1;
    const QuasiBayesFit fit = fit_quasi_bayes(sample, est, rng, rows);
    const Eigen::MatrixXd& theta = fit.draws.theta;
    rep.first_draw = theta.row(0).transpose();
    if (config.variant == BootstrapVariant::Qbb1) {
      rep.estimate = rep.first_draw;
      rep.std_error = Eigen::VectorXd::Zero(theta.cols());
    } else {
      rep.estimate = theta.colwise().mean().transpose();
      const Eigen::MatrixXd centred = theta.rowwise() - rep.estimate.transpose();
      rep.std_error = (centred.array().square().colwise().sum() / static_cast<double>(theta.rows())).sqrt().transpose();
    }
    rep.ok = true;
  } catch (const DegenerateFirstStage& e) {
    rep.message = e.what();
  } catch (const NotPositiveDefinite& e) {
    rep.message = e.what();
  }
  return rep;
}

/*! \brief Bootstrap of the quasi-posterior mean and standard error.

    Replication b draws from base_rng.derive(b), so its record does not depend
    on any other replication or on the thread count. Failed replications are
    kept as records; more than max_failure_share failures abort the run.
*/
inline BootstrapRun run_bootstrap(const ChoiceDataset& data, const BootstrapConfig& config) {
  if (config.replications < 1) throw std::invalid_argument("run_bootstrap: need at least one replication");
  data.validate();
  BootstrapRun run;
  run.variant = config.variant;
  run.replications.resize(static_cast<std::size_t>(config.replications));
  parallel_for(run.replications.size(), config.threads,
               [&](std::size_t b) { run.replications[b] = run_replication(data, config, b); });

  const std::size_t failures = run.replications.size() - run.successes();
  if (static_cast<double>(failures) > config.max_failure_share * static_cast<double>(config.replications)) {
    throw FailureThresholdExceeded(std::to_string(failures) + " of " + std::to_string(config.replications) +
                                   " bootstrap replications failed");
  }
  MnpDataset shape;
  shape.num_alternatives = data.num_alternatives;
  shape.num_covariates = 2;
  shape.coefficient_names = {"beta_tilde", "lambda"};
  std::vector<std::string> names = parameter_names(shape);
  run.names = std::move(names);
  if (config.replications < 50) run.warnings.push_back("fewer than 50 replications: intervals unavailable");
  return run;
}

inline constexpr std::size_t kMinIntervalReplications = 50;

/// [Q(alpha/2), Q(1 - alpha/2)] of the bootstrap estimates of coordinate j.
inline Interval percentile_interval(const BootstrapRun& run, std::size_t j, double alpha,
                                    std::size_t min_replications = kMinIntervalReplications) {
  const std::vector<double> values = run.estimates(j);
  if (values.size() < min_replications) {
    throw InsufficientReplications(std::to_string(values.size()) + " successful, need " +
                                   std::to_string(min_replications));
  }
  return equal_tailed_interval(values, 1.0 - alpha);
}

/*! \brief Studentised bootstrap interval.

    With t_b = (theta*_b - theta) / s*_b and q its empirical quantile function
    the interval is [theta - s q(1 - alpha/2), theta - s q(alpha/2)].
*/
inline Interval percentile_t_interval(std::span<const double> estimates, std::span<const double> std_errors,
                                      double theta, double s, double alpha,
                                      std::size_t min_replications = kMinIntervalReplications) {
  if (estimates.size() != std_errors.size()) throw std::invalid_argument("estimate / SE length mismatch");
  if (estimates.size() < min_replications) {
    throw InsufficientReplications(std::to_string(estimates.size()) + " successful, need " +
                                   std::to_string(min_replications));
  }
  if (!(s > 0.0)) throw ZeroStandardError("full-sample standard error is " + format_double(s));
  std::vector<double> t(estimates.size());
  for (std::size_t b = 0; b < t.size(); ++b) {
    if (!(std_errors[b] > 0.0)) throw ZeroStandardError("replication " + std::to_string(b));
    t[b] = (estimates[b] - theta) / std_errors[b];
  }
  std::sort(t.begin(), t.end());
  return {theta - s * sorted_quantile(t, 1.0 - alpha / 2.0), theta - s * sorted_quantile(t, alpha / 2.0)};
}

inline Interval percentile_t_interval(const BootstrapRun& run, double theta, double s, std::size_t j, double alpha,
                                      std::size_t min_replications = kMinIntervalReplications) {
  const auto est = run.estimates(j);
  const auto se = run.std_errors(j);
  return percentile_t_interval(est, se, theta, s, alpha, min_replications);
}

}  // namespace qbcf

#endif  // QBCF_BOOTSTRAP_HPP

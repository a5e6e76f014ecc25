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

#ifndef QBCF_CLI_CONFIG_HPP
#define QBCF_CLI_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qbcf/bootstrap.hpp"
#include "qbcf/error.hpp"
#include "qbcf/mnp_gibbs.hpp"
#include "qbcf/quasi_bayes.hpp"
#include "qbcf/simulation.hpp"

namespace qbcf::cli {

using json = nlohmann::json;

enum class Command { Simulate, Fit, Bootstrap, Coverage };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::Simulate:
      return "simulate";
    case Command::Fit:
      return "fit";
    case Command::Bootstrap:
      return "bootstrap";
    case Command::Coverage:
      return "coverage";
  }
  return "?";
}

/// Complete configuration with every key at its default. Null marks an
/// optional setting (flat prior, data-driven bandwidths, estimated Sigma).
inline json default_config(Command command) {
  const bool coverage = command == Command::Coverage;
  json cfg = {
      {"seed", 1},
      {"data", nullptr},
      {"dgp",
       {{"design", "I"}, {"num_alternatives", 2}, {"n", coverage ? 500 : 1000}, {"beta_tilde", 1.0},
        {"lambda", 0.6}, {"sigma2", 0.75}}},
      {"first_stage",
       {{"grid_points", 25},
        {"lower_multiplier", 0.05},
        {"upper_multiplier", 5.0},
        {"bandwidths", nullptr},
        {"use_true_controls", false}}},
      {"prior", {{"beta_mean", nullptr}, {"beta_covariance", nullptr}, {"wishart_dof", nullptr}, {"wishart_scale", nullptr}}},
      {"gibbs", {{"burn_in", coverage ? 1000 : 2000}, {"keep", coverage ? 1000 : 2000}, {"thin", 1}, {"fixed_sigma", nullptr}}},
      {"bootstrap",
       {{"replications", 100}, {"variant", "QBB"}, {"max_failure_share", 0.10}, {"min_interval_replications", 50}}},
      {"coverage", {{"reps", 200}, {"methods", {"QB", "QBB", "QBB-t", "QBB1"}}}},
      {"levels", {0.90, 0.95, 0.99}},
  };
  return cfg;
}

namespace detail {

inline bool compatible(const json& def, const json& value) {
  if (def.is_null() || value.is_null()) return true;
  if (def.is_number() && value.is_number()) return true;
  return def.type() == value.type();
}

inline void merge_into(json& target, const json& user, const std::string& path) {
  if (!user.is_object()) throw SchemaError((path.empty() ? "config" : path) + " must be a JSON object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!target.contains(it.key())) throw SchemaError("unknown config key '" + key + "'");
    json& slot = target[it.key()];
    if (slot.is_object() && it.value().is_object()) {
      merge_into(slot, it.value(), key);
      continue;
    }
    if (!compatible(slot, it.value())) throw SchemaError("config key '" + key + "' has the wrong type");
    slot = it.value();
  }
}

inline Eigen::MatrixXd to_matrix(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) throw SchemaError(key + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw SchemaError(key + " is ragged");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number()) throw SchemaError(key + " must hold numbers");
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

inline Eigen::VectorXd to_vector(const json& j, const std::string& key) {
  if (!j.is_array()) throw SchemaError(key + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw SchemaError(key + " must hold numbers");
    v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  }
  return v;
}

template <typename T>
T get(const json& cfg, const char* section, const char* key) {
  try {
    return cfg.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string(section) + "." + key + " has an invalid value");
  }
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw SchemaError(what);
}

}  // namespace detail

/// Defaults overlaid with the user document; unknown keys and type
/// mismatches raise SchemaError.
inline json resolve_config(Command command, const json& user, std::optional<std::uint64_t> seed_override = {},
                           std::optional<std::string> data_override = {}) {
  json cfg = default_config(command);
  if (!user.is_null()) detail::merge_into(cfg, user, "");
  if (seed_override) cfg["seed"] = *seed_override;
  if (data_override) cfg["data"] = *data_override;
  const json& seed = cfg["seed"];
  if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
    throw SchemaError("seed must be a non-negative integer");
  }
  cfg["seed"] = seed.get<std::uint64_t>();
  const bool needs_data = command == Command::Fit || command == Command::Bootstrap;
  if (needs_data && !cfg["data"].is_string()) throw SchemaError("a dataset path is required (config key 'data' or --data)");
  return cfg;
}

inline std::uint64_t seed_of(const json& cfg) { return cfg.at("seed").get<std::uint64_t>(); }

inline DgpSpec dgp_from(const json& cfg) {
  DgpSpec spec;
  const auto design = detail::get<std::string>(cfg, "dgp", "design");
  detail::require(design == "I" || design == "II", "dgp.design must be \"I\" or \"II\"");
  spec.design = design == "I" ? Design::I : Design::II;
  spec.num_alternatives = detail::get<int>(cfg, "dgp", "num_alternatives");
  detail::require(spec.num_alternatives == 2 || spec.num_alternatives == 3, "dgp.num_alternatives must be 2 or 3");
  const auto n = detail::get<long long>(cfg, "dgp", "n");
  detail::require(n >= 1, "dgp.n must be positive");
  spec.n = static_cast<std::size_t>(n);
  spec.beta_tilde = detail::get<double>(cfg, "dgp", "beta_tilde");
  spec.lambda = detail::get<double>(cfg, "dgp", "lambda");
  spec.sigma2 = detail::get<double>(cfg, "dgp", "sigma2");
  detail::require(spec.sigma2 > 0.0, "dgp.sigma2 must be positive");
  return spec;
}

inline std::vector<double> levels_from(const json& cfg) {
  std::vector<double> levels;
  for (const auto& l : cfg.at("levels")) {
    detail::require(l.is_number() && l.get<double>() > 0.0 && l.get<double>() < 1.0, "levels must lie in (0, 1)");
    levels.push_back(l.get<double>());
  }
  detail::require(!levels.empty(), "levels must not be empty");
  return levels;
}

/// Prior for a design with J alternatives and p coefficients; unset entries
/// fall back to PriorSpec::default_for.
inline PriorSpec prior_from(const json& cfg, int num_alternatives, int num_covariates) {
  PriorSpec prior = PriorSpec::default_for(num_alternatives, num_covariates);
  const json& p = cfg.at("prior");
  if (!p.at("beta_mean").is_null()) prior.beta_mean = detail::to_vector(p.at("beta_mean"), "prior.beta_mean");
  if (!p.at("beta_covariance").is_null()) {
    prior.flat_beta = false;
    prior.beta_covariance = detail::to_matrix(p.at("beta_covariance"), "prior.beta_covariance");
  }
  if (!p.at("wishart_dof").is_null()) prior.wishart_dof = detail::get<double>(cfg, "prior", "wishart_dof");
  if (!p.at("wishart_scale").is_null()) prior.wishart_scale = detail::to_matrix(p.at("wishart_scale"), "prior.wishart_scale");
  try {
    prior.validate(num_alternatives, num_covariates);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("prior: ") + e.what());
  } catch (const NotPositiveDefinite& e) {
    throw SchemaError(std::string("prior: ") + e.what());
  }
  return prior;
}

inline EstimationConfig estimation_from(const json& cfg, int num_alternatives) {
  EstimationConfig est;
  const auto points = detail::get<int>(cfg, "first_stage", "grid_points");
  detail::require(points >= 1, "first_stage.grid_points must be positive");
  est.grid.points = static_cast<std::size_t>(points);
  est.grid.lower_multiplier = detail::get<double>(cfg, "first_stage", "lower_multiplier");
  est.grid.upper_multiplier = detail::get<double>(cfg, "first_stage", "upper_multiplier");
  detail::require(est.grid.lower_multiplier > 0.0 && est.grid.upper_multiplier >= est.grid.lower_multiplier,
                  "first_stage multipliers must satisfy 0 < lower <= upper");
  const json& bw = cfg.at("first_stage").at("bandwidths");
  if (!bw.is_null()) {
    const Eigen::MatrixXd grid = detail::to_matrix(bw, "first_stage.bandwidths");
    for (Eigen::Index r = 0; r < grid.rows(); ++r) {
      detail::require((grid.row(r).array() > 0.0).all(), "first_stage.bandwidths must be positive");
      est.grid.explicit_grid.push_back(grid.row(r).transpose());
    }
  }
  est.use_true_controls = detail::get<bool>(cfg, "first_stage", "use_true_controls");
  est.prior = prior_from(cfg, num_alternatives, 2);
  est.burn_in = detail::get<int>(cfg, "gibbs", "burn_in");
  est.keep = detail::get<int>(cfg, "gibbs", "keep");
  est.thin = detail::get<int>(cfg, "gibbs", "thin");
  detail::require(est.burn_in >= 0 && est.keep >= 1 && est.thin >= 1, "gibbs: need burn_in >= 0, keep >= 1, thin >= 1");
  const json& fixed = cfg.at("gibbs").at("fixed_sigma");
  if (!fixed.is_null()) {
    est.fixed_sigma = detail::to_matrix(fixed, "gibbs.fixed_sigma");
    detail::require(est.fixed_sigma->rows() == num_alternatives && est.fixed_sigma->cols() == num_alternatives &&
                        (*est.fixed_sigma)(0, 0) == 1.0 && is_positive_definite(*est.fixed_sigma),
                    "gibbs.fixed_sigma must be a J x J positive definite matrix with first element 1");
  }
  return est;
}

inline BootstrapVariant variant_from(const json& cfg) {
  const auto v = detail::get<std::string>(cfg, "bootstrap", "variant");
  detail::require(v == "QBB" || v == "QBB1", "bootstrap.variant must be \"QBB\" or \"QBB1\"");
  return v == "QBB" ? BootstrapVariant::Qbb : BootstrapVariant::Qbb1;
}

inline BootstrapConfig bootstrap_from(const json& cfg, int num_alternatives) {
  BootstrapConfig bc;
  bc.replications = detail::get<int>(cfg, "bootstrap", "replications");
  detail::require(bc.replications >= 1, "bootstrap.replications must be positive");
  bc.variant = variant_from(cfg);
  bc.max_failure_share = detail::get<double>(cfg, "bootstrap", "max_failure_share");
  detail::require(bc.max_failure_share >= 0.0 && bc.max_failure_share <= 1.0,
                  "bootstrap.max_failure_share must lie in [0, 1]");
  bc.estimation = estimation_from(cfg, num_alternatives);
  return bc;
}

inline std::size_t min_interval_replications_from(const json& cfg) {
  const auto m = detail::get<int>(cfg, "bootstrap", "min_interval_replications");
  detail::require(m >= 1, "bootstrap.min_interval_replications must be positive");
  return static_cast<std::size_t>(m);
}

inline CoverageConfig coverage_from(const json& cfg) {
  CoverageConfig cc;
  cc.spec = dgp_from(cfg);
  cc.reps = detail::get<int>(cfg, "coverage", "reps");
  detail::require(cc.reps >= 1, "coverage.reps must be positive");
  cc.methods.clear();
  for (const auto& m : cfg.at("coverage").at("methods")) {
    detail::require(m.is_string(), "coverage.methods must hold strings");
    const auto method = parse_method(m.get<std::string>());
    detail::require(method.has_value(), "unknown coverage method '" + m.get<std::string>() + "'");
    cc.methods.push_back(*method);
  }
  detail::require(!cc.methods.empty(), "coverage.methods must not be empty");
  cc.levels = levels_from(cfg);
  const BootstrapConfig bc = bootstrap_from(cfg, cc.spec.num_alternatives);
  cc.bootstrap_replications = bc.replications;
  cc.estimation = bc.estimation;
  cc.bootstrap_max_failure_share = bc.max_failure_share;
  cc.min_interval_replications = min_interval_replications_from(cfg);
  return cc;
}

}  // namespace qbcf::cli

#endif  // QBCF_CLI_CONFIG_HPP

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

#ifndef QBCF_QUASI_BAYES_HPP
#define QBCF_QUASI_BAYES_HPP

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qbcf/dataset.hpp"
#include "qbcf/first_stage.hpp"
#include "qbcf/mnp_gibbs.hpp"
#include "qbcf/random_stream.hpp"

namespace qbcf {

/// Settings shared by a full-sample fit and every bootstrap replication.
struct EstimationConfig {
  BandwidthGridSpec grid;
  std::optional<PriorSpec> prior;  ///< default: PriorSpec::default_for
  int burn_in = 2000;
  int keep = 2000;
  int thin = 1;
  std::optional<Eigen::MatrixXd> fixed_sigma;
  /// Plug in the simulated v_true instead of first-stage residuals.
  bool use_true_controls = false;
  unsigned threads = 1;  ///< first-stage bandwidth search only
};

struct QuasiBayesFit {
  std::optional<FirstStageFit> first_stage;
  MnpDataset mnp;
  PosteriorDraws draws;
};

/// Second-stage design built from the configured control functions.
inline std::pair<std::optional<FirstStageFit>, MnpDataset> build_second_stage(
    const ChoiceDataset& data, const EstimationConfig& config, std::span<const std::size_t> groups = {}) {
  if (config.use_true_controls) {
    const auto v = data.v_dagger_true();
    if (!v) throw SchemaError("true control functions requested but the dataset has no v_true columns");
    return {std::nullopt, make_mnp_dataset(data, *v)};
  }
  FirstStageData fs = FirstStageData::from(data);
  fs.groups.assign(groups.begin(), groups.end());
  FirstStageFit fit = fit_control_functions(fs, config.grid, config.threads);
  MnpDataset mnp = make_mnp_dataset(data, fit.control_functions());
  return {std::move(fit), std::move(mnp)};
}

/// First stage, then the quasi-posterior sampler driven by rng.
inline QuasiBayesFit fit_quasi_bayes(const ChoiceDataset& data, const EstimationConfig& config, const RandomStream& rng,
                                     std::span<const std::size_t> groups = {}) {
  data.validate();
  auto [first_stage, mnp] = build_second_stage(data, config, groups);
  GibbsConfig gibbs;
  gibbs.burn_in = config.burn_in;
  gibbs.keep = config.keep;
  gibbs.thin = config.thin;
  gibbs.rng = rng;
  gibbs.fixed_sigma = config.fixed_sigma;
  const PriorSpec prior = config.prior ? *config.prior : PriorSpec::default_for(mnp.num_alternatives, mnp.num_covariates);
  QuasiBayesFit out{std::move(first_stage), std::move(mnp), {}};
  out.draws = run_gibbs(out.mnp, prior, gibbs);
  return out;
}

}  // namespace qbcf

#endif  // QBCF_QUASI_BAYES_HPP

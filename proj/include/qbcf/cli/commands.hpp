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

#ifndef QBCF_CLI_COMMANDS_HPP
#define QBCF_CLI_COMMANDS_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "qbcf/bootstrap.hpp"
#include "qbcf/cli/config.hpp"
#include "qbcf/cli/csv.hpp"
#include "qbcf/error.hpp"
#include "qbcf/format.hpp"
#include "qbcf/mnp_gibbs.hpp"
#include "qbcf/quasi_bayes.hpp"
#include "qbcf/random_stream.hpp"
#include "qbcf/simulation.hpp"

namespace qbcf::cli {

namespace fs = std::filesystem;

/*! Random streams of a command with seed s, all children of (s, 0):
    simulated data derive(0), full-sample sampler derive(1), bootstrap base
    derive(2). The coverage experiment hands (s, 0) to the harness.
*/
enum StreamSlot : std::uint64_t { kDataStream = 0, kSamplerStream = 1, kBootstrapStream = 2 };

struct CommandContext {
  fs::path out_dir;
  unsigned threads = 1;
  std::ostream* log = &std::cerr;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("I/O error: " + what) {}
};

inline json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

inline json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
  return out;
}

inline json to_json(const Interval& iv) { return json::array({iv.lower, iv.upper}); }

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << content;
  if (!os) throw IoError("failed writing " + path.string());
}

namespace detail {

// nlohmann's layout, but floats at 17 significant digits; non-finite floats become null.
inline void dump_json(std::ostream& os, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << json(it.key()).dump() << ": ";
        dump_json(os, it.value(), indent, depth + 1);
      }
      os << '\n' << close << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) os << ",\n";
        os << pad;
        dump_json(os, j[k], indent, depth + 1);
      }
      os << '\n' << close << ']';
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      os << (std::isfinite(x) ? format_double(x) : std::string("null"));
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

inline std::string dump_json(const json& j, int indent = 2) {
  std::ostringstream os;
  detail::dump_json(os, j, indent, 0);
  return os.str();
}

inline void write_json(const fs::path& path, const json& j) { write_file(path, dump_json(j) + "\n"); }

inline json read_json_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SchemaError("cannot read config file " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw SchemaError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

inline ChoiceDataset load_dataset(const json& cfg) {
  const fs::path path = cfg.at("data").get<std::string>();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read dataset " + path.string());
  return read_dataset_csv(is);
}

inline void prepare(const CommandContext& ctx, const json& cfg) {
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + ctx.out_dir.string());
  write_json(ctx.out_dir / "config.resolved.json", cfg);
}

inline json truth_json(const DgpSpec& spec) {
  const TrueParameters truth = true_parameters(spec);
  MnpDataset shape;
  shape.num_alternatives = spec.num_alternatives;
  shape.num_covariates = 2;
  shape.coefficient_names = {"beta_tilde", "lambda"};
  return {{"design", spec.design == Design::I ? "I" : "II"},
          {"num_alternatives", spec.num_alternatives},
          {"n", spec.n},
          {"beta_tilde", truth.beta_tilde},
          {"lambda", truth.lambda},
          {"sigma", to_json(truth.sigma)},
          {"epsilon_covariance", to_json(spec.epsilon_covariance())},
          {"names", parameter_names(shape)},
          {"theta", to_json(truth.theta())}};
}

/// dataset.csv and truth.json.
inline void cmd_simulate(const json& cfg, const CommandContext& ctx) {
  const DgpSpec spec = dgp_from(cfg);
  prepare(ctx, cfg);
  RandomStream rng = RandomStream(seed_of(cfg), 0).derive(kDataStream);
  const SimulatedData sim = generate_dataset(spec, rng);
  std::ostringstream csv;
  write_dataset_csv(csv, sim.data);
  write_file(ctx.out_dir / "dataset.csv", csv.str());
  write_json(ctx.out_dir / "truth.json", truth_json(spec));
}

inline json summary_json(const QuasiBayesFit& fit, const PosteriorSummary& s, const EstimationConfig& est) {
  json intervals = json::array();
  for (std::size_t l = 0; l < s.levels.size(); ++l) {
    Eigen::VectorXd lo(s.mean.size()), hi(s.mean.size());
    for (Eigen::Index c = 0; c < s.mean.size(); ++c) {
      lo(c) = s.intervals[l][static_cast<std::size_t>(c)].lower;
      hi(c) = s.intervals[l][static_cast<std::size_t>(c)].upper;
    }
    intervals.push_back({{"level", s.levels[l]}, {"lower", to_json(lo)}, {"upper", to_json(hi)}});
  }
  json first_stage = nullptr;
  if (fit.first_stage) {
    json bw = json::array();
    for (const auto& h : fit.first_stage->bandwidths) bw.push_back(to_json(h));
    first_stage = {{"bandwidths", bw},
                   {"cv_scores", fit.first_stage->cv_scores},
                   {"fallback_count", fit.first_stage->fallback_count}};
  }
  return {{"n", fit.mnp.size()},
          {"num_alternatives", fit.mnp.num_alternatives},
          {"names", s.names},
          {"mean", to_json(s.mean)},
          {"sd", to_json(s.sd)},
          {"covariance", to_json(s.covariance)},
          {"credible_intervals", intervals},
          {"first_stage", first_stage},
          {"sampler",
           {{"burn_in", est.burn_in},
            {"keep", est.keep},
            {"thin", est.thin},
            {"sweeps", fit.draws.sweeps},
            {"consistency_checks", fit.draws.consistency_checks}}},
          {"warnings", fit.draws.warnings}};
}

/// summary.json and draws.csv.
inline void cmd_fit(const json& cfg, const CommandContext& ctx) {
  const ChoiceDataset data = load_dataset(cfg);
  EstimationConfig est = estimation_from(cfg, data.num_alternatives);
  const auto levels = levels_from(cfg);
  prepare(ctx, cfg);
  est.threads = ctx.threads;
  const QuasiBayesFit fit = fit_quasi_bayes(data, est, RandomStream(seed_of(cfg), 0).derive(kSamplerStream));
  const PosteriorSummary s = summarize(fit.draws, levels);
  write_json(ctx.out_dir / "summary.json", summary_json(fit, s, est));
  std::ostringstream csv;
  write_draws_csv(csv, fit.draws);
  write_file(ctx.out_dir / "draws.csv", csv.str());
}

/// bootstrap_run.csv and intervals.json.
inline void cmd_bootstrap(const json& cfg, const CommandContext& ctx) {
  const ChoiceDataset data = load_dataset(cfg);
  BootstrapConfig bc = bootstrap_from(cfg, data.num_alternatives);
  const auto levels = levels_from(cfg);
  const std::size_t min_reps = min_interval_replications_from(cfg);
  prepare(ctx, cfg);
  const RandomStream root(seed_of(cfg), 0);
  bc.base_rng = root.derive(kBootstrapStream);
  bc.threads = ctx.threads;

  // bootstrap first so a degenerate design trips the failure threshold
  const BootstrapRun run = run_bootstrap(data, bc);
  EstimationConfig full = bc.estimation;
  full.threads = ctx.threads;
  const QuasiBayesFit fit = fit_quasi_bayes(data, full, root.derive(kSamplerStream));
  const PosteriorSummary s = summarize(fit.draws, levels);

  std::ostringstream csv;
  run.write_csv(csv);
  write_file(ctx.out_dir / "bootstrap_run.csv", csv.str());

  json warnings = run.warnings;
  json failures = json::array();
  for (const auto& r : run.replications) {
    if (!r.ok) failures.push_back({{"b", r.index}, {"message", r.message}});
  }
  json report_levels = json::array();
  try {
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const double alpha = 1.0 - levels[l];
      json coords = json::array();
      for (std::size_t j = 0; j < run.names.size(); ++j) {
        json entry = {{"name", run.names[j]}, {"QB", to_json(s.intervals[l][j])}};
        if (run.variant == BootstrapVariant::Qbb) {
          entry["QBB"] = to_json(percentile_interval(run, j, alpha, min_reps));
          const auto jj = static_cast<Eigen::Index>(j);
          entry["QBB-t"] = s.sd(jj) > 0.0 ? to_json(percentile_t_interval(run, s.mean(jj), s.sd(jj), j, alpha, min_reps))
                                          : json(nullptr);
          const auto single = run.first_draws(j);
          entry["QBB1"] = to_json(equal_tailed_interval(single, levels[l]));
        } else {
          entry["QBB1"] = to_json(percentile_interval(run, j, alpha, min_reps));
        }
        coords.push_back(entry);
      }
      report_levels.push_back({{"level", levels[l]}, {"coordinates", coords}});
    }
  } catch (const InsufficientReplications& e) {
    report_levels = json::array();
    warnings.push_back(e.what());
  }
  const json report = {{"variant", to_string(run.variant)},
                       {"replications", run.replications.size()},
                       {"successes", run.successes()},
                       {"failures", failures},
                       {"full_sample", {{"names", s.names}, {"mean", to_json(s.mean)}, {"sd", to_json(s.sd)}}},
                       {"intervals", report_levels},
                       {"warnings", warnings}};
  write_json(ctx.out_dir / "intervals.json", report);
}

/// coverage.csv, coverage_replications.csv and coverage.txt.
inline CoverageReport cmd_coverage(const json& cfg, const CommandContext& ctx) {
  CoverageConfig cc = coverage_from(cfg);
  prepare(ctx, cfg);
  cc.threads = ctx.threads;
  const CoverageReport report = run_coverage_experiment(cc, RandomStream(seed_of(cfg), 0));
  std::ostringstream csv, reps;
  report.write_csv(csv);
  report.write_replications_csv(reps);
  write_file(ctx.out_dir / "coverage.csv", csv.str());
  write_file(ctx.out_dir / "coverage_replications.csv", reps.str());
  write_file(ctx.out_dir / "coverage.txt", report.table());
  for (const auto& r : report.replications) {
    if (!r.ok) *ctx.log << "replication " << r.index << " failed: " << r.message << '\n';
  }
  *ctx.log << "coverage: " << report.effective_reps << " of " << cc.reps << " replications in "
           << report.runtime_seconds << " s\n";
  return report;
}

/// Exit status: 0 success, 2 configuration or schema error, 3 failure
/// threshold exceeded, 1 anything else.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const FailureThresholdExceeded*>(&e) != nullptr) return 3;
  return 1;
}

/// Runs one command from its user config document.
inline int run_command(Command command, const json& user, const CommandContext& ctx,
                       std::optional<std::uint64_t> seed = {}, std::optional<std::string> data = {}) {
  try {
    const json cfg = resolve_config(command, user, seed, data);
    switch (command) {
      case Command::Simulate:
        cmd_simulate(cfg, ctx);
        break;
      case Command::Fit:
        cmd_fit(cfg, ctx);
        break;
      case Command::Bootstrap:
        cmd_bootstrap(cfg, ctx);
        break;
      case Command::Coverage:
        (void)cmd_coverage(cfg, ctx);
        break;
    }
    return 0;
  } catch (const std::exception& e) {
    *ctx.log << "qbcf " << to_string(command) << ": " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace qbcf::cli

#endif  // QBCF_CLI_COMMANDS_HPP

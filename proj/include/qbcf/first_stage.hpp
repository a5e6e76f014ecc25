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

#ifndef QBCF_FIRST_STAGE_HPP
#define QBCF_FIRST_STAGE_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbcf/dataset.hpp"
#include "qbcf/error.hpp"
#include "qbcf/parallel.hpp"

namespace qbcf {

/*! \brief Nadaraya-Watson estimate at \p query with a product Gaussian kernel.

    Weights are w_i = prod_k K((query_k - x_ik) / h_k) with K(u) = exp(-u^2 / 2),
    evaluated as exp of the summed exponents. Row \p exclude_index, when given,
    is skipped without being read. Returns std::nullopt when every weight
    underflows to zero.
*/
inline std::optional<double> nw_estimate(std::span<const double> query, const Eigen::MatrixXd& data_x,
                                         const Eigen::VectorXd& data_y,
                                         const Eigen::VectorXd& bandwidth,
                                         std::optional<std::size_t> exclude_index = std::nullopt) {
  const Eigen::Index n = data_x.rows();
  const Eigen::Index d = data_x.cols();
  if (static_cast<Eigen::Index>(query.size()) != d || bandwidth.size() != d || data_y.size() != n) {
    throw std::invalid_argument("nw_estimate: dimension mismatch");
  }
  for (Eigen::Index k = 0; k < d; ++k) {
    if (!(bandwidth(k) > 0.0)) throw std::invalid_argument("nw_estimate: bandwidth must be > 0");
  }
  if (exclude_index && static_cast<Eigen::Index>(*exclude_index) >= n) {
    throw std::invalid_argument("nw_estimate: exclude_index out of range");
  }
  double sum_w = 0.0;
  double sum_wy = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (exclude_index && static_cast<Eigen::Index>(*exclude_index) == i) continue;
    double expo = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double u = (query[static_cast<std::size_t>(k)] - data_x(i, k)) / bandwidth(k);
      expo += u * u;
    }
    const double w = std::exp(-0.5 * expo);
    sum_w += w;
    sum_wy += w * data_y(i);
  }
  if (!(sum_w > 0.0)) return std::nullopt;
  return sum_wy / sum_w;
}

/// Geometric grid of bandwidth multipliers applied to the per-dimension
/// Silverman rule of thumb, or an explicit list of bandwidth vectors.
struct BandwidthGridSpec {
  std::size_t points = 25;
  double lower_multiplier = 0.05;
  double upper_multiplier = 5.0;
  std::vector<Eigen::VectorXd> explicit_grid;
};

/// Silverman's rule of thumb (4 / (d + 2))^{1/(d+4)} sd_k n^{-1/(d+4)} per column.
inline Eigen::VectorXd silverman_bandwidth(const Eigen::MatrixXd& x) {
  const auto n = static_cast<double>(x.rows());
  const auto d = static_cast<double>(x.cols());
  const double factor = std::pow(4.0 / (d + 2.0), 1.0 / (d + 4.0)) * std::pow(n, -1.0 / (d + 4.0));
  Eigen::VectorXd h(x.cols());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double mean = x.col(k).mean();
    const double var = (x.col(k).array() - mean).square().sum() / std::max(1.0, n - 1.0);
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    h(k) = factor * sd;
  }
  return h;
}

inline std::vector<Eigen::VectorXd> make_bandwidth_grid(const Eigen::MatrixXd& x,
                                                        const BandwidthGridSpec& spec) {
  if (!spec.explicit_grid.empty()) return spec.explicit_grid;
  if (spec.points == 0 || !(spec.lower_multiplier > 0.0) ||
      !(spec.upper_multiplier >= spec.lower_multiplier)) {
    throw std::invalid_argument("invalid bandwidth grid specification");
  }
  const Eigen::VectorXd base = silverman_bandwidth(x);
  std::vector<Eigen::VectorXd> grid;
  grid.reserve(spec.points);
  for (std::size_t g = 0; g < spec.points; ++g) {
    const double t = spec.points == 1 ? 0.0 : static_cast<double>(g) / static_cast<double>(spec.points - 1);
    const double mult = spec.lower_multiplier * std::pow(spec.upper_multiplier / spec.lower_multiplier, t);
    grid.push_back(base * mult);
  }
  return grid;
}

struct BandwidthChoice {
  Eigen::VectorXd bandwidth;
  double cv_score = 0.0;
  std::size_t grid_index = 0;
  std::vector<double> scores;  ///< LOO criterion at every grid point
};

namespace detail {

// Rows sharing a group label with row i (other than i itself).
inline std::vector<std::vector<std::size_t>> group_members(std::span<const std::size_t> groups) {
  std::vector<std::vector<std::size_t>> members(groups.size());
  if (groups.empty()) return members;
  std::size_t max_label = 0;
  for (auto g : groups) max_label = std::max(max_label, g);
  std::vector<std::vector<std::size_t>> by_label(max_label + 1);
  for (std::size_t i = 0; i < groups.size(); ++i) by_label[groups[i]].push_back(i);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (auto j : by_label[groups[i]]) {
      if (j != i) members[i].push_back(j);
    }
  }
  return members;
}

inline double response_variance(const Eigen::VectorXd& y) {
  const double mean = y.mean();
  return (y.array() - mean).square().mean();
}

// Leave-out criterion at one bandwidth: mean squared held-out error, with
// rows whose held-out kernel mass is zero charged the response variance.
inline double loo_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& h,
                        const std::vector<std::vector<std::size_t>>& members, double penalty) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd scaled = x;
  for (Eigen::Index k = 0; k < d; ++k) scaled.col(k) /= h(k);
  Eigen::ArrayXd expo(n);
  Eigen::ArrayXd w(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    expo.setZero();
    for (Eigen::Index k = 0; k < d; ++k) {
      expo += (scaled.col(k).array() - scaled(i, k)).square();
    }
    w = (-0.5 * expo).exp();
    w(i) = 0.0;
    if (!members.empty()) {
      for (auto j : members[static_cast<std::size_t>(i)]) w(static_cast<Eigen::Index>(j)) = 0.0;
    }
    const double sum_w = w.sum();
    if (sum_w > 0.0) {
      const double err = y(i) - (w * y.array()).sum() / sum_w;
      total += err * err;
    } else {
      total += penalty;
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace detail

/*! \brief Leave-one-out cross-validated bandwidth over a grid.

    Minimises (1/n) sum_i (y_i - m_{-i}(x_i))^2; ties go to the larger
    bandwidth (larger squared norm). With \p groups, every row sharing row i's
    label is left out together with it, which keeps exact duplicates from a
    bootstrap resample from predicting each other.
*/
inline BandwidthChoice loocv_bandwidth(const Eigen::MatrixXd& data_x, const Eigen::VectorXd& data_y,
                                       const std::vector<Eigen::VectorXd>& grid,
                                       std::span<const std::size_t> groups = {},
                                       unsigned threads = 1) {
  if (grid.empty()) throw std::invalid_argument("loocv_bandwidth: empty grid");
  if (data_y.size() != data_x.rows()) throw std::invalid_argument("loocv_bandwidth: size mismatch");
  if (!groups.empty() && static_cast<Eigen::Index>(groups.size()) != data_x.rows()) {
    throw std::invalid_argument("loocv_bandwidth: group labels size mismatch");
  }
  for (const auto& h : grid) {
    if (h.size() != data_x.cols() || (h.array() <= 0.0).any()) {
      throw std::invalid_argument("loocv_bandwidth: grid bandwidths must be positive");
    }
  }
  const auto members = detail::group_members(groups);
  const double penalty = detail::response_variance(data_y);
  BandwidthChoice choice;
  choice.scores.assign(grid.size(), 0.0);
  parallel_for(grid.size(), threads, [&](std::size_t g) {
    choice.scores[g] = detail::loo_score(data_x, data_y, grid[g], members, penalty);
  });
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double s = choice.scores[g];
    const double b = choice.scores[best];
    if (s < b || (s == b && grid[g].squaredNorm() > grid[best].squaredNorm())) best = g;
  }
  choice.grid_index = best;
  choice.bandwidth = grid[best];
  choice.cv_score = choice.scores[best];
  return choice;
}

/// One first-stage equation: endogenous regressor and its instruments.
struct FirstStageEquation {
  Eigen::VectorXd x_e;
  Eigen::MatrixXd z;
};

/// Per-alternative first-stage inputs, alternatives 0..J.
struct FirstStageData {
  std::vector<FirstStageEquation> equations;
  std::vector<std::size_t> groups;  ///< optional leave-out groups (bootstrap source rows)
  std::size_t min_observations = 20;

  static FirstStageData from(const ChoiceDataset& data) {
    FirstStageData out;
    for (int j = 0; j <= data.num_alternatives; ++j) {
      out.equations.push_back({data.x_e.col(j), data.z[static_cast<std::size_t>(j)]});
    }
    return out;
  }
};

struct FirstStageFit {
  std::vector<Eigen::VectorXd> bandwidths;  ///< per alternative 0..J
  std::vector<double> cv_scores;
  Eigen::MatrixXd fitted;     ///< n x (J + 1), zeta_hat_j(Z_ij)
  Eigen::MatrixXd residuals;  ///< n x (J + 1), x_e - fitted
  std::vector<std::size_t> fallback_count;

  /// Control functions v_hat(i, j) - v_hat(i, 0), n x J.
  Eigen::MatrixXd control_functions() const {
    const Eigen::Index J = residuals.cols() - 1;
    Eigen::MatrixXd out(residuals.rows(), J);
    for (Eigen::Index j = 1; j <= J; ++j) out.col(j - 1) = residuals.col(j) - residuals.col(0);
    return out;
  }
};

/// Share of AllWeightsZero evaluation points above which a fit is rejected.
inline constexpr double kMaxFallbackShare = 0.05;

struct KernelFitValues {
  Eigen::VectorXd values;
  std::size_t fallback_count = 0;
};

/*! \brief Kernel fit at each query row; rows with no kernel mass take the
    response of the nearest data point in (bandwidth-scaled) instrument space.
    Throws DegenerateFirstStage when more than 5% of queries need the fallback.
*/
inline KernelFitValues kernel_fit_with_fallback(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& x,
                                                const Eigen::VectorXd& y, const Eigen::VectorXd& h) {
  KernelFitValues out;
  out.values.resize(queries.rows());
  std::vector<double> q(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index r = 0; r < queries.rows(); ++r) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) q[static_cast<std::size_t>(k)] = queries(r, k);
    if (auto v = nw_estimate(q, x, y, h)) {
      out.values(r) = *v;
      continue;
    }
    ++out.fallback_count;
    Eigen::Index nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double dist = ((x.row(i) - queries.row(r)).transpose().array() / h.array()).square().sum();
      if (dist < best) {
        best = dist;
        nearest = i;
      }
    }
    out.values(r) = y(nearest);
  }
  if (static_cast<double>(out.fallback_count) > kMaxFallbackShare * static_cast<double>(queries.rows())) {
    throw DegenerateFirstStage(std::to_string(out.fallback_count) + " of " +
                               std::to_string(queries.rows()) + " points have no kernel mass");
  }
  return out;
}

/*! \brief Kernel first stage for every alternative.

    Each equation gets its own cross-validated bandwidth; fitted values are
    then the in-sample (nothing left out) kernel fit at the chosen bandwidth
    and residuals are x_e - fitted exactly.
*/
inline FirstStageFit fit_control_functions(const FirstStageData& data, const BandwidthGridSpec& grid_spec = {},
                                           unsigned threads = 1) {
  if (data.equations.empty()) throw std::invalid_argument("fit_control_functions: no equations");
  const Eigen::Index n = data.equations.front().x_e.size();
  if (static_cast<std::size_t>(n) < data.min_observations) {
    throw std::invalid_argument("fit_control_functions: need at least " +
                                std::to_string(data.min_observations) + " observations");
  }
  const std::size_t eqs = data.equations.size();
  for (const auto& eq : data.equations) {
    if (eq.x_e.size() != n || eq.z.rows() != n) {
      throw std::invalid_argument("fit_control_functions: equation length mismatch");
    }
    if (!eq.x_e.allFinite() || !eq.z.allFinite()) {
      throw std::invalid_argument("fit_control_functions: non-finite first-stage input");
    }
  }
  FirstStageFit fit;
  fit.bandwidths.resize(eqs);
  fit.cv_scores.resize(eqs);
  fit.fallback_count.resize(eqs);
  fit.fitted.resize(n, static_cast<Eigen::Index>(eqs));
  fit.residuals.resize(n, static_cast<Eigen::Index>(eqs));

  std::vector<std::vector<Eigen::VectorXd>> grids(eqs);
  for (std::size_t j = 0; j < eqs; ++j) grids[j] = make_bandwidth_grid(data.equations[j].z, grid_spec);
  const auto members = detail::group_members(data.groups);

  // Flatten (equation, grid point) so every score is one independent task.
  std::vector<std::size_t> offset(eqs + 1, 0);
  for (std::size_t j = 0; j < eqs; ++j) offset[j + 1] = offset[j] + grids[j].size();
  std::vector<double> scores(offset.back());
  parallel_for(scores.size(), threads, [&](std::size_t t) {
    std::size_t j = 0;
    while (t >= offset[j + 1]) ++j;
    const auto& eq = data.equations[j];
    scores[t] = detail::loo_score(eq.z, eq.x_e, grids[j][t - offset[j]], members,
                                  detail::response_variance(eq.x_e));
  });

  parallel_for(eqs, threads, [&](std::size_t j) {
    const auto& eq = data.equations[j];
    std::size_t best = 0;
    for (std::size_t g = 1; g < grids[j].size(); ++g) {
      const double s = scores[offset[j] + g];
      const double b = scores[offset[j] + best];
      if (s < b || (s == b && grids[j][g].squaredNorm() > grids[j][best].squaredNorm())) best = g;
    }
    fit.bandwidths[j] = grids[j][best];
    fit.cv_scores[j] = scores[offset[j] + best];
    const KernelFitValues values = kernel_fit_with_fallback(eq.z, eq.z, eq.x_e, fit.bandwidths[j]);
    fit.fallback_count[j] = values.fallback_count;
    const auto col = static_cast<Eigen::Index>(j);
    fit.fitted.col(col) = values.values;
    fit.residuals.col(col) = eq.x_e - values.values;
  });
  return fit;
}

}  // namespace qbcf

#endif  // QBCF_FIRST_STAGE_HPP

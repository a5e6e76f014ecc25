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

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <gtest/gtest.h>

#include "qbcf/first_stage.hpp"
#include "qbcf/random_stream.hpp"

namespace {

using qbcf::RandomStream;

Eigen::VectorXd h1(double h) { return Eigen::VectorXd::Constant(1, h); }

// Held-out criterion computed observation by observation through the public
// estimator; rows with no held-out kernel mass are charged the response variance.
double brute_force_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& h,
                      const std::vector<std::size_t>& groups = {}) {
  const Eigen::Index n = x.rows();
  const double mean = y.mean();
  const double var = (y.array() - mean).square().mean();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    // Keep only rows from other groups.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool same = groups.empty() ? j == i : groups[static_cast<std::size_t>(j)] == groups[static_cast<std::size_t>(i)];
      if (!same) keep.push_back(j);
    }
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(keep.size()), x.cols());
    Eigen::VectorXd ys(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
      xs.row(static_cast<Eigen::Index>(r)) = x.row(keep[r]);
      ys(static_cast<Eigen::Index>(r)) = y(keep[r]);
    }
    std::vector<double> q(x.row(i).data(), x.row(i).data() + 0);
    q.clear();
    for (Eigen::Index k = 0; k < x.cols(); ++k) q.push_back(x(i, k));
    const auto est = keep.empty() ? std::nullopt : qbcf::nw_estimate(q, xs, ys, h);
    total += est ? (y(i) - *est) * (y(i) - *est) : var;
  }
  return total / static_cast<double>(n);
}

Eigen::MatrixXd normal_matrix(Eigen::Index n, Eigen::Index d, RandomStream& rng) {
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = rng.normal();
  return m;
}

TEST(NwEstimate, ConstantResponseIsReproduced) {
  RandomStream rng(1, 0);
  const Eigen::MatrixXd x = normal_matrix(50, 2, rng);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(50, 3.25);
  for (double h : {0.05, 0.5, 5.0}) {
    const std::vector<double> q = {0.3, -0.2};
    const auto v = qbcf::nw_estimate(q, x, y, Eigen::Vector2d(h, 2 * h));
    ASSERT_TRUE(v.has_value());
    EXPECT_NEAR(*v, 3.25, 1e-14);
  }
}

TEST(NwEstimate, TwoPointHandComputation) {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  const Eigen::Vector2d y(0.0, 1.0);
  const std::vector<double> q = {0.0};
  const auto v = qbcf::nw_estimate(q, x, y, h1(0.5));
  ASSERT_TRUE(v.has_value());
  EXPECT_NEAR(*v, std::exp(-2.0) / (1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(*v, 0.11920, 5e-6);
}

TEST(NwEstimate, FarQueryWithTinyBandwidthHasNoMass) {
  RandomStream rng(1, 1);
  const Eigen::MatrixXd x = normal_matrix(30, 1, rng);
  const Eigen::VectorXd y = normal_matrix(30, 1, rng).col(0);
  const std::vector<double> q = {100.0};
  EXPECT_FALSE(qbcf::nw_estimate(q, x, y, h1(0.01)).has_value());
}

TEST(NwEstimate, ExcludedRowIsNeverRead) {
  RandomStream rng(1, 2);
  Eigen::MatrixXd x = normal_matrix(40, 2, rng);
  Eigen::VectorXd y = normal_matrix(40, 1, rng).col(0);
  const std::vector<double> q = {0.1, 0.2};
  const Eigen::Vector2d h(0.4, 0.7);
  const double before = *qbcf::nw_estimate(q, x, y, h, 17);
  x.row(17) << 1e300, std::nan("");
  y(17) = std::nan("");
  const double after = *qbcf::nw_estimate(q, x, y, h, 17);
  EXPECT_EQ(before, after);
}

TEST(NwEstimate, ScalingEquivariance) {
  RandomStream rng(1, 3);
  const Eigen::MatrixXd x = normal_matrix(60, 1, rng);
  const Eigen::VectorXd y = normal_matrix(60, 1, rng).col(0);
  const std::vector<double> q = {0.4};
  const double base = *qbcf::nw_estimate(q, x, y, h1(0.3));
  EXPECT_EQ(*qbcf::nw_estimate(q, x, Eigen::VectorXd(4.0 * y), h1(0.3)), 4.0 * base);
  EXPECT_NEAR(*qbcf::nw_estimate(q, x, Eigen::VectorXd(-3.7 * y), h1(0.3)), -3.7 * base, 1e-14 * std::abs(base) + 1e-15);
}

TEST(NwEstimate, RejectsBadArguments) {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  const Eigen::Vector2d y(0.0, 1.0);
  const std::vector<double> q = {0.0};
  EXPECT_THROW(qbcf::nw_estimate(q, x, y, h1(0.0)), std::invalid_argument);
  EXPECT_THROW(qbcf::nw_estimate(q, x, y, h1(0.5), 2), std::invalid_argument);
  EXPECT_THROW(qbcf::nw_estimate(q, x, y, Eigen::Vector2d(1, 1)), std::invalid_argument);
}

TEST(LoocvBandwidth, ScoresMatchBruteForce) {
  RandomStream rng(2, 0);
  const Eigen::MatrixXd x = normal_matrix(80, 2, rng);
  Eigen::VectorXd y(80);
  for (int i = 0; i < 80; ++i) y(i) = std::sin(x(i, 0)) + x(i, 1) * x(i, 1) + 0.3 * rng.normal();
  std::vector<Eigen::VectorXd> grid = {Eigen::Vector2d(0.05, 0.05), Eigen::Vector2d(0.2, 0.3), Eigen::Vector2d(0.5, 0.5),
                                       Eigen::Vector2d(2.0, 1.0)};
  const auto choice = qbcf::loocv_bandwidth(x, y, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_NEAR(choice.scores[g], brute_force_cv(x, y, grid[g]), 1e-12);
  }
  EXPECT_EQ(choice.cv_score, choice.scores[choice.grid_index]);
  for (double s : choice.scores) EXPECT_LE(choice.cv_score, s);
}

TEST(LoocvBandwidth, ZeroMassRowsChargedTheVariance) {
  Eigen::MatrixXd x(4, 1);
  x << 0.0, 0.001, 50.0, 100.0;
  const Eigen::Vector4d y(1.0, 2.0, 3.0, 5.0);
  const std::vector<Eigen::VectorXd> grid = {h1(0.01)};
  const auto choice = qbcf::loocv_bandwidth(x, y, grid);
  EXPECT_NEAR(choice.cv_score, brute_force_cv(x, y, grid[0]), 1e-12);
  EXPECT_TRUE(std::isfinite(choice.cv_score));
}

TEST(LoocvBandwidth, GroupsAreLeftOutTogether) {
  RandomStream rng(2, 1);
  const Eigen::MatrixXd base = normal_matrix(30, 1, rng);
  const Eigen::VectorXd ybase = normal_matrix(30, 1, rng).col(0);
  // Bootstrap-style sample with duplicates.
  std::vector<std::size_t> rows(30);
  for (auto& r : rows) r = rng.index(30);
  Eigen::MatrixXd x(30, 1);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) {
    x(i, 0) = base(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]), 0);
    y(i) = ybase(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
  }
  const std::vector<Eigen::VectorXd> grid = {h1(0.1), h1(0.4), h1(1.5)};
  const auto grouped = qbcf::loocv_bandwidth(x, y, grid, rows);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_NEAR(grouped.scores[g], brute_force_cv(x, y, grid[g], rows), 1e-12);
  }
}

TEST(LoocvBandwidth, SingleGridPointIsReturned) {
  RandomStream rng(2, 2);
  const Eigen::MatrixXd x = normal_matrix(25, 1, rng);
  const Eigen::VectorXd y = x.col(0);
  const auto choice = qbcf::loocv_bandwidth(x, y, {h1(0.77)});
  EXPECT_EQ(choice.bandwidth(0), 0.77);
  EXPECT_EQ(choice.grid_index, 0u);
}

TEST(LoocvBandwidth, TiesGoToTheLargerBandwidth) {
  RandomStream rng(2, 3);
  const Eigen::MatrixXd x = normal_matrix(25, 1, rng);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(25, 1.0);
  const auto choice = qbcf::loocv_bandwidth(x, y, {h1(0.5), h1(2.0), h1(1.0)});
  EXPECT_EQ(choice.bandwidth(0), 2.0);
}

TEST(LoocvBandwidth, NoiseFavoursLargeBandwidth) {
  RandomStream rng(2, 4);
  const Eigen::MatrixXd x = normal_matrix(200, 1, rng);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) y(i) = 2.0 + rng.normal();
  const auto choice = qbcf::loocv_bandwidth(x, y, {h1(0.01), h1(100.0)});
  EXPECT_LE(choice.scores[1], choice.scores[0]);
  EXPECT_EQ(choice.bandwidth(0), 100.0);
}

TEST(LoocvBandwidth, SmoothSinusoidHasInteriorMinimum) {
  RandomStream rng(2, 5);
  const int n = 200;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 2.0 * std::numbers::pi * rng.uniform();
    y(i) = std::sin(x(i, 0)) + 0.3 * rng.normal();
  }
  std::vector<Eigen::VectorXd> grid;
  for (int g = 0; g < 30; ++g) grid.push_back(h1(0.01 * std::pow(1000.0, g / 29.0)));
  const auto choice = qbcf::loocv_bandwidth(x, y, grid);
  EXPECT_GT(choice.grid_index, 0u);
  EXPECT_LT(choice.grid_index, grid.size() - 1);
}

TEST(LoocvBandwidth, ThreadCountDoesNotChangeScores) {
  RandomStream rng(2, 6);
  const Eigen::MatrixXd x = normal_matrix(120, 1, rng);
  const Eigen::VectorXd y = x.col(0).array().sin().matrix() + 0.1 * normal_matrix(120, 1, rng).col(0);
  const auto grid = qbcf::make_bandwidth_grid(x, {});
  EXPECT_EQ(qbcf::loocv_bandwidth(x, y, grid, {}, 1).scores, qbcf::loocv_bandwidth(x, y, grid, {}, 4).scores);
}

TEST(BandwidthGrid, GeometricAroundRuleOfThumb) {
  RandomStream rng(3, 0);
  const Eigen::MatrixXd x = normal_matrix(400, 2, rng);
  const Eigen::VectorXd base = qbcf::silverman_bandwidth(x);
  for (Eigen::Index k = 0; k < 2; ++k) {
    const double mean = x.col(k).mean();
    const double sd = std::sqrt((x.col(k).array() - mean).square().sum() / 399.0);
    EXPECT_NEAR(base(k), std::pow(4.0 / 4.0, 1.0 / 6.0) * sd * std::pow(400.0, -1.0 / 6.0), 1e-14);
  }
  const auto grid = qbcf::make_bandwidth_grid(x, {});
  ASSERT_EQ(grid.size(), 25u);
  EXPECT_NEAR(grid.front()(0), 0.05 * base(0), 1e-15);
  EXPECT_NEAR(grid.back()(1), 5.0 * base(1), 1e-14);
  for (std::size_t g = 1; g + 1 < grid.size(); ++g) {
    EXPECT_NEAR(grid[g](0) * grid[g](0), grid[g - 1](0) * grid[g + 1](0), 1e-14);
  }
  qbcf::BandwidthGridSpec explicit_spec;
  explicit_spec.explicit_grid = {Eigen::Vector2d(0.1, 0.2)};
  EXPECT_EQ(qbcf::make_bandwidth_grid(x, explicit_spec).size(), 1u);
}

qbcf::FirstStageData single_equation(const Eigen::VectorXd& x_e, const Eigen::MatrixXd& z) {
  qbcf::FirstStageData d;
  d.equations.push_back({x_e, z});
  return d;
}

TEST(FitControlFunctions, NoiselessLinearFitIsTight) {
  RandomStream rng(4, 0);
  const int n = 500;
  const Eigen::MatrixXd z = normal_matrix(n, 1, rng);
  const Eigen::VectorXd x = 1.0 + 2.0 * z.col(0).array();
  const auto fit = qbcf::fit_control_functions(single_equation(x, z));
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().mean());
  const double rms = std::sqrt(fit.residuals.col(0).squaredNorm() / n);
  EXPECT_LE(rms, 0.05 * sd);
}

TEST(FitControlFunctions, ResidualIdentityAndCvScore) {
  RandomStream rng(4, 1);
  const int n = 150;
  qbcf::FirstStageData data;
  for (int j = 0; j < 3; ++j) {
    const Eigen::MatrixXd z = normal_matrix(n, 1, rng);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = z(i, 0) * z(i, 0) + rng.normal();
    data.equations.push_back({x, z});
  }
  const auto fit = qbcf::fit_control_functions(data);
  for (int j = 0; j < 3; ++j) {
    const auto& eq = data.equations[static_cast<std::size_t>(j)];
    for (int i = 0; i < n; ++i) ASSERT_EQ(fit.residuals(i, j), eq.x_e(i) - fit.fitted(i, j));
    EXPECT_NEAR(fit.cv_scores[static_cast<std::size_t>(j)], brute_force_cv(eq.z, eq.x_e, fit.bandwidths[static_cast<std::size_t>(j)]),
                1e-12);
    const auto direct = qbcf::loocv_bandwidth(eq.z, eq.x_e, qbcf::make_bandwidth_grid(eq.z, {}));
    EXPECT_EQ(direct.bandwidth, fit.bandwidths[static_cast<std::size_t>(j)]);
  }
  const Eigen::MatrixXd cf = fit.control_functions();
  ASSERT_EQ(cf.cols(), 2);
  for (int i = 0; i < n; ++i) {
    EXPECT_EQ(cf(i, 0), fit.residuals(i, 1) - fit.residuals(i, 0));
    EXPECT_EQ(cf(i, 1), fit.residuals(i, 2) - fit.residuals(i, 0));
  }
}

TEST(FitControlFunctions, IdenticalEquationsGiveIdenticalFits) {
  RandomStream rng(4, 2);
  const int n = 120;
  const Eigen::MatrixXd z = normal_matrix(n, 1, rng);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = std::exp(0.5 * z(i, 0)) + 0.2 * rng.normal();
  qbcf::FirstStageData data;
  data.equations = {{x, z}, {x, z}, {x, z}};
  const auto fit = qbcf::fit_control_functions(data, {}, 3);
  EXPECT_EQ(fit.bandwidths[0], fit.bandwidths[1]);
  EXPECT_EQ(fit.bandwidths[1], fit.bandwidths[2]);
  EXPECT_EQ(fit.residuals.col(0), fit.residuals.col(1));
  EXPECT_EQ(fit.residuals.col(0), fit.residuals.col(2));
}

TEST(FitControlFunctions, ThreadCountDoesNotChangeTheFit) {
  RandomStream rng(4, 3);
  const int n = 100;
  qbcf::FirstStageData data;
  for (int j = 0; j < 3; ++j) {
    const Eigen::MatrixXd z = normal_matrix(n, 1, rng);
    data.equations.push_back({Eigen::VectorXd(z.col(0).array().cube() + normal_matrix(n, 1, rng).col(0).array()), z});
  }
  const auto a = qbcf::fit_control_functions(data, {}, 1);
  const auto b = qbcf::fit_control_functions(data, {}, 4);
  EXPECT_EQ(a.residuals, b.residuals);
  EXPECT_EQ(a.cv_scores, b.cv_scores);
}

TEST(FitControlFunctions, RejectsTooFewObservationsAndNonFiniteInput) {
  RandomStream rng(4, 4);
  const Eigen::MatrixXd z = normal_matrix(10, 1, rng);
  EXPECT_THROW(qbcf::fit_control_functions(single_equation(z.col(0), z)), std::invalid_argument);
  Eigen::MatrixXd z2 = normal_matrix(30, 1, rng);
  Eigen::VectorXd x2 = z2.col(0);
  x2(3) = std::nan("");
  EXPECT_THROW(qbcf::fit_control_functions(single_equation(x2, z2)), std::invalid_argument);
}

TEST(KernelFitWithFallback, NearestNeighbourAndDegenerateThreshold) {
  Eigen::MatrixXd x(3, 1);
  x << 0.0, 1.0, 2.0;
  const Eigen::Vector3d y(10.0, 20.0, 30.0);
  // 1 of 20 queries outside the support is within the 5% allowance.
  Eigen::MatrixXd q = Eigen::MatrixXd::Constant(20, 1, 1.0);
  q(0, 0) = 40.0;
  const auto ok = qbcf::kernel_fit_with_fallback(q, x, y, h1(0.01));
  EXPECT_EQ(ok.fallback_count, 1u);
  EXPECT_EQ(ok.values(0), 30.0);
  EXPECT_EQ(ok.values(1), 20.0);
  q(1, 0) = -40.0;
  EXPECT_THROW(qbcf::kernel_fit_with_fallback(q, x, y, h1(0.01)), qbcf::DegenerateFirstStage);
}

}  // namespace

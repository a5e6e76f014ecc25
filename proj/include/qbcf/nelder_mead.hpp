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

#ifndef QBCF_NELDER_MEAD_HPP
#define QBCF_NELDER_MEAD_HPP

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace qbcf {

struct NelderMeadOptions {
  double initial_step = 0.1;
  double tolerance = 1e-6;  ///< stop when every vertex is this close to the best one
  int max_iterations = 5000;
};

struct NelderMeadResult {
  Eigen::VectorXd minimizer;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free minimisation with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& start, const NelderMeadOptions& options = {}) {
  const Eigen::Index d = start.size();
  if (d == 0) throw std::invalid_argument("nelder_mead: empty start vector");
  std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(d + 1), start);
  std::vector<double> fx(static_cast<std::size_t>(d + 1));
  for (Eigen::Index k = 0; k < d; ++k) x[static_cast<std::size_t>(k + 1)](k) += options.initial_step;
  for (std::size_t v = 0; v < x.size(); ++v) fx[v] = f(x[v]);

  std::vector<std::size_t> order(x.size());
  NelderMeadResult result;
  for (;;) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double diameter = 0.0;
    for (const auto& v : x) diameter = std::max(diameter, (v - x[best]).lpNorm<Eigen::Infinity>());
    if (diameter < options.tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= options.max_iterations) break;
    ++result.iterations;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t v = 0; v < x.size(); ++v) {
      if (v != worst) centroid += x[v];
    }
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd reflected = centroid + (centroid - x[worst]);
    const double f_reflected = f(reflected);
    if (f_reflected < fx[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - x[worst]);
      const double f_expanded = f(expanded);
      if (f_expanded < f_reflected) {
        x[worst] = expanded;
        fx[worst] = f_expanded;
      } else {
        x[worst] = reflected;
        fx[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < fx[second]) {
      x[worst] = reflected;
      fx[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < fx[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                : Eigen::VectorXd(centroid + 0.5 * (x[worst] - centroid));
    const double f_contracted = f(contracted);
    if (f_contracted < (outside ? f_reflected : fx[worst])) {
      x[worst] = contracted;
      fx[worst] = f_contracted;
      continue;
    }
    for (std::size_t v = 0; v < x.size(); ++v) {
      if (v == best) continue;
      x[v] = x[best] + 0.5 * (x[v] - x[best]);
      fx[v] = f(x[v]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fx.begin(), fx.end()) - fx.begin());
  result.minimizer = x[best];
  result.value = fx[best];
  return result;
}

}  // namespace qbcf

#endif  // QBCF_NELDER_MEAD_HPP

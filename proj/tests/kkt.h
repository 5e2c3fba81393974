/*
 * Copyright 2026 The phenomtl Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PHENOMTL_TESTS_KKT_H_
#define PHENOMTL_TESTS_KKT_H_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "phenomtl/logreg.h"

namespace phenomtl::testing {

// Largest violation of the L1 subgradient optimality conditions, with the
// loss gradient recomputed densely from scratch:
//   w_j != 0: |g_j + lambda sign(w_j)|,   w_j == 0: max(0, |g_j| - lambda),
//   intercept: |g_0|.
inline double kkt_violation(const logreg::LinearModel& model,
                            std::span<const cohort::FeatureVector> features,
                            std::span<const uint8_t> labels, double lambda) {
  const size_t d = static_cast<size_t>(model.weights.size());
  std::vector<double> g(d, 0.0);
  double g0 = 0.0;
  const double n = static_cast<double>(features.size());
  for (size_t r = 0; r < features.size(); ++r) {
    std::vector<double> x(d, 0.0);
    for (const auto i : features[r].indices) x[i] = 1.0;
    double z = model.intercept;
    for (size_t j = 0; j < d; ++j) z += model.weights[static_cast<Eigen::Index>(j)] * x[j];
    const double residual = (1.0 / (1.0 + std::exp(-z)) - labels[r]) / n;
    g0 += residual;
    for (size_t j = 0; j < d; ++j) g[j] += residual * x[j];
  }
  double worst = std::abs(g0);
  for (size_t j = 0; j < d; ++j) {
    const double w = model.weights[static_cast<Eigen::Index>(j)];
    const double v = w != 0.0 ? std::abs(g[j] + lambda * (w > 0 ? 1.0 : -1.0))
                               : std::max(0.0, std::abs(g[j]) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace phenomtl::testing

#endif  // PHENOMTL_TESTS_KKT_H_

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

// Ranking metrics for heavily imbalanced binary tasks.
//
// Tied scores are treated as one block: a threshold either admits every
// example with that score or none of them.

#ifndef PHENOMTL_METRICS_H_
#define PHENOMTL_METRICS_H_

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace phenomtl::metrics {

struct PRPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

// One point per distinct score, in descending score order.
struct PRCurve {
  std::vector<PRPoint> points;
};

// Throws std::invalid_argument on length mismatch, empty input, NaN scores or
// when no positive label is present.
PRCurve pr_curve(std::span<const double> scores, std::span<const uint8_t> labels);

// Average precision: sum_k (R_k - R_{k-1}) * P_k over the curve (step
// interpolation).
double auprc(std::span<const double> scores, std::span<const uint8_t> labels);

// Mann-Whitney statistic with half credit for ties. Requires both classes.
double auroc(std::span<const double> scores, std::span<const uint8_t> labels);

// CSV with header "threshold,precision,recall".
void write_pr_curve_csv(const PRCurve& curve, std::ostream& out);

}  // namespace phenomtl::metrics

#endif  // PHENOMTL_METRICS_H_

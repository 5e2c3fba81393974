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

#ifndef PHENOMTL_TESTS_METRIC_ORACLES_H_
#define PHENOMTL_TESTS_METRIC_ORACLES_H_

#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "phenomtl/common.h"

namespace phenomtl::testing {

// Threshold sweep: precision and recall of {score >= t} for each distinct t.
inline double brute_auprc(const std::vector<double>& s, const std::vector<uint8_t>& y) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  double positives = 0;
  for (auto v : y) positives += v;
  double area = 0, previous = 0;
  for (const double t : thresholds) {
    double tp = 0, predicted = 0;
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) {
        ++predicted;
        tp += y[i];
      }
    }
    const double recall = tp / positives;
    area += (recall - previous) * (tp / predicted);
    previous = recall;
  }
  return area;
}

// Fraction of (positive, negative) pairs ranked correctly, ties count half.
inline double brute_auroc(const std::vector<double>& s, const std::vector<uint8_t>& y) {
  double wins = 0, pairs = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      ++pairs;
      if (s[i] > s[j]) wins += 1.0;
      if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

struct ScoredInstance {
  std::vector<double> scores;
  std::vector<uint8_t> labels;
};

// 2 <= n <= 30 with few distinct score levels so ties are common; both
// classes present.
inline ScoredInstance random_scored_instance(Rng& rng) {
  ScoredInstance in;
  const size_t n = 2 + rng.below(29);
  const int levels = 1 + static_cast<int>(rng.below(8));
  for (size_t i = 0; i < n; ++i) {
    in.scores.push_back(static_cast<double>(rng.below(levels)) / levels);
    in.labels.push_back(rng.bernoulli(0.4));
  }
  in.labels[0] = 1;
  in.labels[1] = 0;
  return in;
}

}  // namespace phenomtl::testing

#endif  // PHENOMTL_TESTS_METRIC_ORACLES_H_

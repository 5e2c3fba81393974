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

#include "phenomtl/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace phenomtl::metrics {
namespace {

void check_inputs(std::span<const double> scores, std::span<const uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  if (scores.empty()) throw std::invalid_argument("no scored examples");
  for (const auto s : scores) {
    if (std::isnan(s)) throw std::invalid_argument("scores must not be NaN");
  }
  for (const auto y : labels) {
    if (y > 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

// Indices ordered by descending score. Ties keep input order; ties are
// consumed as blocks so the order within a block does not matter.
std::vector<size_t> descending_order(std::span<const double> scores) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

PRCurve pr_curve(std::span<const double> scores, std::span<const uint8_t> labels) {
  check_inputs(scores, labels);
  const auto positives = std::count(labels.begin(), labels.end(), uint8_t{1});
  if (positives == 0) throw std::invalid_argument("PR metrics need a positive label");

  const auto order = descending_order(scores);
  PRCurve curve;
  int64_t tp = 0;
  int64_t fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double score = scores[order[i]];
    while (i < order.size() && scores[order[i]] == score) {
      if (labels[order[i]]) ++tp; else ++fp;
      ++i;
    }
    curve.points.push_back(PRPoint{score, static_cast<double>(tp) / positives,
                                   static_cast<double>(tp) / (tp + fp)});
  }
  return curve;
}

double auprc(std::span<const double> scores, std::span<const uint8_t> labels) {
  const auto curve = pr_curve(scores, labels);
  double area = 0.0;
  double previous_recall = 0.0;
  for (const auto& p : curve.points) {
    area += (p.recall - previous_recall) * p.precision;
    previous_recall = p.recall;
  }
  return area;
}

double auroc(std::span<const double> scores, std::span<const uint8_t> labels) {
  check_inputs(scores, labels);
  const auto positives = std::count(labels.begin(), labels.end(), uint8_t{1});
  const auto negatives = static_cast<int64_t>(labels.size()) - positives;
  if (positives == 0 || negatives == 0) {
    throw std::invalid_argument("AUROC needs both classes");
  }
  // Walk ascending blocks; each positive gains the negatives strictly below
  // plus half of the negatives tied with it.
  auto order = descending_order(scores);
  std::reverse(order.begin(), order.end());
  double wins = 0.0;
  int64_t negatives_below = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double score = scores[order[i]];
    int64_t block_pos = 0;
    int64_t block_neg = 0;
    while (i < order.size() && scores[order[i]] == score) {
      if (labels[order[i]]) ++block_pos; else ++block_neg;
      ++i;
    }
    wins += static_cast<double>(block_pos) *
            (static_cast<double>(negatives_below) + 0.5 * static_cast<double>(block_neg));
    negatives_below += block_neg;
  }
  return wins / (static_cast<double>(positives) * static_cast<double>(negatives));
}

void write_pr_curve_csv(const PRCurve& curve, std::ostream& out) {
  out << "threshold,precision,recall\n";
  char buffer[96];
  for (const auto& p : curve.points) {
    std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g,%.17g\n", p.threshold,
                  p.precision, p.recall);
    out << buffer;
  }
}

}  // namespace phenomtl::metrics

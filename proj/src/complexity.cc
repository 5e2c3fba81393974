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

#include "phenomtl/complexity.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace phenomtl::complexity {
namespace {

double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (const double t : terms) sum += t;
  return sum;
}

}  // namespace

CombinationHistogram::CombinationHistogram(int n_buckets) {
  if (n_buckets < 2) throw std::invalid_argument("need at least two buckets");
  counts.assign(static_cast<size_t>(n_buckets), 0);
}

void CombinationHistogram::add(size_t bucket, int64_t n) {
  counts.at(bucket) += n;
  total += n;
}

std::string combination_string(const ruledsl::OracleFeatureSet& oracle,
                               const PatientRecord& record) {
  std::string s(oracle.features.size(), '0');
  for (size_t i = 0; i < oracle.features.size(); ++i) {
    if (oracle.features[i].holds(record)) s[i] = '1';
  }
  return s;
}

size_t bucket_of(std::string_view combination, int n_buckets) {
  if (n_buckets < 2) throw std::invalid_argument("need at least two buckets");
  return static_cast<size_t>(fnv1a64(combination) % static_cast<uint64_t>(n_buckets));
}

std::pair<CombinationHistogram, CombinationHistogram> bucketize(
    std::span<const std::string> case_strings,
    std::span<const std::string> control_strings, int n_buckets) {
  CombinationHistogram cases(n_buckets);
  CombinationHistogram controls(n_buckets);
  for (const auto& s : case_strings) cases.add(bucket_of(s, n_buckets));
  for (const auto& s : control_strings) controls.add(bucket_of(s, n_buckets));
  return {std::move(cases), std::move(controls)};
}

double entropy_of_counts(std::span<const int64_t> counts) {
  int64_t total = 0;
  for (const auto c : counts) {
    if (c < 0) throw std::invalid_argument("negative histogram count");
    total += c;
  }
  if (total == 0) throw std::invalid_argument("entropy of an empty histogram");
  std::vector<int64_t> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> terms;
  for (const auto c : sorted) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    terms.push_back(-p * std::log(p));
  }
  return sorted_sum(terms);
}

double entropy(const CombinationHistogram& histogram) {
  return entropy_of_counts(histogram.counts);
}

double kl_divergence(const CombinationHistogram& cases,
                     const CombinationHistogram& controls, double alpha) {
  if (cases.n_buckets() != controls.n_buckets()) {
    throw std::invalid_argument("histograms have different bucket counts");
  }
  if (!(alpha > 0.0)) throw std::invalid_argument("smoothing alpha must be positive");
  const double n = cases.n_buckets();
  const double case_norm = static_cast<double>(cases.total) + alpha * n;
  const double control_norm = static_cast<double>(controls.total) + alpha * n;
  std::vector<double> terms;
  terms.reserve(cases.counts.size());
  for (size_t i = 0; i < cases.counts.size(); ++i) {
    const double p = (static_cast<double>(cases.counts[i]) + alpha) / case_norm;
    const double q = (static_cast<double>(controls.counts[i]) + alpha) / control_norm;
    terms.push_back(p * std::log(p / q));
  }
  // Negative float noise around an exact zero is clipped.
  return std::max(0.0, sorted_sum(terms));
}

ComplexityReport analyze(std::span<const PatientRecord> records,
                         const ruledsl::PhenotypeDefinition& definition,
                         int n_buckets, double alpha) {
  const auto oracle = ruledsl::extract_oracle_features(definition);
  std::vector<std::string> case_strings;
  std::vector<std::string> control_strings;
  for (const auto& r : records) {
    auto s = combination_string(oracle, r);
    (ruledsl::evaluate(definition, r) ? case_strings : control_strings)
        .push_back(std::move(s));
  }
  if (case_strings.empty() || control_strings.empty()) {
    throw std::invalid_argument("complexity analysis of " + definition.name +
                                " needs at least one case and one control");
  }
  auto [cases, controls] = bucketize(case_strings, control_strings, n_buckets);
  ComplexityReport report;
  report.phenotype = definition.name;
  report.n_cases = static_cast<int64_t>(case_strings.size());
  report.n_controls = static_cast<int64_t>(control_strings.size());
  report.prevalence = static_cast<double>(report.n_cases) /
                      static_cast<double>(report.n_cases + report.n_controls);
  report.entropy = entropy(cases);
  report.kl = kl_divergence(cases, controls, alpha);
  report.n_buckets = n_buckets;
  report.alpha = alpha;
  report.cases = std::move(cases);
  report.controls = std::move(controls);
  return report;
}

void write_report_csv(std::span<const ComplexityReport> reports, std::ostream& out) {
  out << "phenotype,prevalence,entropy_nats,kl_nats,n_buckets,alpha\n";
  char buffer[160];
  for (const auto& r : reports) {
    std::snprintf(buffer, sizeof(buffer), ",%.17g,%.17g,%.17g,%d,%.17g\n",
                  r.prevalence, r.entropy, r.kl, r.n_buckets, r.alpha);
    out << r.phenotype << buffer;
  }
}

void write_histogram_csv(const ComplexityReport& report, std::ostream& out) {
  out << "bucket,case_count,control_count\n";
  for (size_t i = 0; i < report.cases.counts.size(); ++i) {
    out << i << ',' << report.cases.counts[i] << ',' << report.controls.counts[i] << '\n';
  }
}

}  // namespace phenomtl::complexity

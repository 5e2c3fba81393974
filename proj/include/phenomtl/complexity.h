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

// Phenotype complexity from oracle features.
//
// Each patient is summarised by which of the definition's atoms it
// satisfies, written as a binary string. Strings are hashed into a fixed
// number of buckets, giving one histogram for cases and one for controls.
// The case histogram's Shannon entropy measures how diverse the positives
// are; the smoothed KL divergence from controls to cases measures how
// separable the classes are. All logarithms are natural.

#ifndef PHENOMTL_COMPLEXITY_H_
#define PHENOMTL_COMPLEXITY_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phenomtl/common.h"
#include "phenomtl/ruledsl.h"

namespace phenomtl::complexity {

inline constexpr int kDefaultBuckets = 32;
inline constexpr double kDefaultAlpha = 1.0;

struct CombinationHistogram {
  std::vector<int64_t> counts;
  int64_t total = 0;

  explicit CombinationHistogram(int n_buckets = kDefaultBuckets);
  int n_buckets() const { return static_cast<int>(counts.size()); }
  void add(size_t bucket, int64_t n = 1);

  friend bool operator==(const CombinationHistogram&,
                         const CombinationHistogram&) = default;
};

struct ComplexityReport {
  std::string phenotype;
  double prevalence = 0.0;
  double entropy = 0.0;  // nats
  double kl = 0.0;       // nats
  int n_buckets = kDefaultBuckets;
  double alpha = kDefaultAlpha;
  int64_t n_cases = 0;
  int64_t n_controls = 0;
  CombinationHistogram cases;
  CombinationHistogram controls;
};

// Character i is '1' iff oracle atom i holds for the record.
std::string combination_string(const ruledsl::OracleFeatureSet& oracle,
                               const PatientRecord& record);

// FNV-1a 64 of the string's bytes, mod n_buckets.
size_t bucket_of(std::string_view combination, int n_buckets);

std::pair<CombinationHistogram, CombinationHistogram> bucketize(
    std::span<const std::string> case_strings,
    std::span<const std::string> control_strings, int n_buckets = kDefaultBuckets);

// -sum p ln p over non-empty buckets. Throws on an empty histogram.
double entropy(const CombinationHistogram& histogram);

// Shannon entropy of raw counts (zeros ignored). Terms are summed in sorted
// count order, so the result does not depend on bucket labelling.
double entropy_of_counts(std::span<const int64_t> counts);

// sum P+ ln(P+/P-) with both histograms Laplace-smoothed by `alpha`.
double kl_divergence(const CombinationHistogram& cases,
                     const CombinationHistogram& controls, double alpha = kDefaultAlpha);

// Full pipeline over a cohort labelled by `definition` itself.
ComplexityReport analyze(std::span<const PatientRecord> records,
                         const ruledsl::PhenotypeDefinition& definition,
                         int n_buckets = kDefaultBuckets, double alpha = kDefaultAlpha);

// Columns: phenotype,prevalence,entropy_nats,kl_nats,n_buckets,alpha
void write_report_csv(std::span<const ComplexityReport> reports, std::ostream& out);
// Columns: bucket,case_count,control_count
void write_histogram_csv(const ComplexityReport& report, std::ostream& out);

}  // namespace phenomtl::complexity

#endif  // PHENOMTL_COMPLEXITY_H_

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

// Synthetic patient cohorts: generation, labelling, multi-hot encoding and
// stratified splitting.
//
// Records keep per-code occurrence counts because count() predicates need
// them; the feature encoding discards counts and keeps presence only.

#ifndef PHENOMTL_COHORT_H_
#define PHENOMTL_COHORT_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phenomtl/common.h"
#include "phenomtl/ruledsl.h"

namespace phenomtl::cohort {

using LabelColumn = std::vector<uint8_t>;

struct CodeMarginal {
  std::string code;
  double frequency = 0.0;
};

// Codes injected together. When the bundle fires each member is kept with
// `keep_probability`, so joint presence is far likelier than under
// independent draws.
struct SignalBundle {
  std::string name;
  std::vector<std::string> codes;
  double probability = 0.0;
  double keep_probability = 1.0;
};

struct GeneratorConfig {
  int64_t n_patients = 10000;
  uint64_t seed = 1;
  std::vector<CodeMarginal> codes;
  std::vector<SignalBundle> bundles;
  // Background codes "ICD9:N0000", "CPT:N0001", "RX:N0002", ... with
  // frequencies drawn log-uniformly in [noise_frequency_min, noise_frequency_max].
  int n_noise_codes = 0;
  double noise_frequency_min = 0.001;
  double noise_frequency_max = 0.05;
  // Each present code gets 1 + Geometric(repeat_probability) occurrences,
  // capped at max_count.
  double repeat_probability = 0.3;
  int max_count = 9;
  int age_min = 18;
  int age_max = 89;
  std::vector<std::string> genders = {"F", "M"};
  std::vector<std::string> races = {"white", "black", "asian", "other"};
  std::vector<std::string> ethnicities = {"hispanic", "nonhispanic"};

  // Throws std::invalid_argument.
  void validate() const;
};

std::vector<PatientRecord> generate_cohort(const GeneratorConfig& config);

// Line-delimited cohort file: a '#' header line, then one patient per line
// with tab-separated id, age, gender, race, ethnicity and space-separated
// "NS:code:count" entries.
void write_cohort(std::span<const PatientRecord> records, std::ostream& out);
std::vector<PatientRecord> read_cohort(std::istream& in);
std::string serialize_cohort(std::span<const PatientRecord> records);
void save_cohort(std::span<const PatientRecord> records, const std::string& path);
std::vector<PatientRecord> load_cohort(const std::string& path);

struct PhenotypeLabels {
  LabelColumn labels;
  double prevalence = 0.0;
};

PhenotypeLabels label_cohort(std::span<const PatientRecord> records,
                             const ruledsl::PhenotypeDefinition& definition);

// A named set of diagnosis codes.
struct PhecodeGrouping {
  std::string name;
  std::vector<std::string> members;

  // Non-empty, ICD9 namespace only.
  void validate() const;
};

// One grouping per line: "NAME CODE CODE ...". '#' lines are comments.
std::vector<PhecodeGrouping> parse_groupings(std::string_view text);
std::vector<PhecodeGrouping> load_groupings(const std::string& path);

// Column j, row i is 1 iff record i has any member of grouping j.
std::vector<LabelColumn> derive_phecode_tasks(
    std::span<const PatientRecord> records,
    std::span<const PhecodeGrouping> groupings);

struct TaskPrevalence {
  std::string name;
  double prevalence = 0.0;
};

// Filters the pool to prevalence in [lo, hi], shuffles it with `seed` and
// returns prefixes of the requested (ascending) sizes, so smaller sets are
// nested in larger ones.
std::vector<std::vector<std::string>> select_auxiliary_tasks(
    std::span<const TaskPrevalence> pool, double lo, double hi,
    std::span<const int> sizes, uint64_t seed);

// Multi-hot feature space: one indicator per code, per demographic category
// and per integer age, ordered by (namespace, code).
class CodeVocabulary {
 public:
  CodeVocabulary() = default;

  static CodeVocabulary build(std::span<const PatientRecord> records);
  // Sorts and checks for duplicates.
  static CodeVocabulary from_names(std::vector<std::string> names);

  size_t size() const { return names_.size(); }
  const std::string& name(size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<uint32_t> index(std::string_view name) const;

  // One name per line; line number is the index.
  void write(std::ostream& out) const;
  static CodeVocabulary read(std::istream& in);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, uint32_t> lookup_;
};

// Demographic indicator names of a record ("DEMO:gender=F", "DEMO:age=47", ...).
std::vector<std::string> demographic_features(const PatientRecord& record);

struct FeatureVector {
  std::vector<uint32_t> indices;  // strictly increasing
  size_t dimension = 0;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Codes absent from the vocabulary are dropped.
FeatureVector encode(const PatientRecord& record, const CodeVocabulary& vocab);
std::vector<std::string> decode(const FeatureVector& features,
                                const CodeVocabulary& vocab);

struct LabeledDataset {
  std::vector<int64_t> ids;
  std::vector<FeatureVector> features;
  LabelColumn target;
  std::vector<LabelColumn> auxiliary;  // one column per auxiliary task
  std::vector<std::string> task_names;
  size_t dimension = 0;

  size_t size() const { return features.size(); }
  double prevalence() const;
  void validate() const;

  LabeledDataset subset(std::span<const size_t> rows) const;
  // Keeps only the named auxiliary columns, in the given order.
  LabeledDataset with_tasks(std::span<const std::string> names) const;
};

LabeledDataset make_dataset(std::span<const PatientRecord> records,
                            const CodeVocabulary& vocab, LabelColumn target,
                            std::vector<LabelColumn> auxiliary = {},
                            std::vector<std::string> task_names = {});

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct SplitIndices {
  std::vector<size_t> train;
  std::vector<size_t> validation;
  std::vector<size_t> test;
};

// Positives and negatives are shuffled and cut independently. Cut points are
// floor(n * train) and floor(n * (train + validation)) per class; the rest
// goes to test. Throws std::invalid_argument if a class cannot populate every
// split.
SplitIndices stratified_split(std::span<const uint8_t> target,
                              const SplitFractions& fractions, uint64_t seed);

struct DatasetSplit {
  LabeledDataset train;
  LabeledDataset validation;
  LabeledDataset test;
};

DatasetSplit split_dataset(const LabeledDataset& dataset,
                           const SplitFractions& fractions, uint64_t seed);

}  // namespace phenomtl::cohort

#endif  // PHENOMTL_COHORT_H_

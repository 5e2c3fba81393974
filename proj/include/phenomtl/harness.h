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

// Experiment protocol: for each random stratified split, every grid cell is
// trained as a single-task network and as a multitask network at each
// auxiliary-set size, and an L1 logistic regression is fitted. The best
// model per split and family is chosen on validation AUPRC and reported on
// the test split.

#ifndef PHENOMTL_HARNESS_H_
#define PHENOMTL_HARNESS_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phenomtl/cohort.h"
#include "phenomtl/config.h"
#include "phenomtl/logreg.h"
#include "phenomtl/nnet.h"
#include "phenomtl/ruledsl.h"

namespace phenomtl::harness {

struct GridCell {
  int layers = 1;
  int width = 128;
  double learning_rate = 1e-4;
};

// Layers outermost, then widths, then learning rates.
std::vector<GridCell> expand_grid(const ExperimentConfig& config);

// One trained model. For LR rows layers and width are 0 and `lr` holds the
// selected lambda.
struct RunRecord {
  int split = 0;
  std::string family;
  int layers = 0;
  int width = 0;
  double lr = 0.0;
  int aux_size = 0;
  double val_auprc = 0.0;
  double test_auprc = 0.0;
  uint64_t seed = 0;
  int64_t wall_ms = 0;

  // "STNN", "LR" or "MTNN-<aux_size>".
  std::string model_key() const;
  // Equality on everything except wall time.
  bool same_outcome(const RunRecord& other) const;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct FailedRun {
  int split = 0;
  std::string family;
  int aux_size = 0;
  int cell = 0;
  std::string message;

  friend bool operator==(const FailedRun&, const FailedRun&) = default;
};

struct ResultTable {
  std::vector<RunRecord> runs;
  std::vector<FailedRun> failures;
  std::vector<RunRecord> best;  // per (split, model key), chosen on validation

  static ResultTable from_runs(std::vector<RunRecord> runs,
                               std::vector<FailedRun> failures = {});
  friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

struct Delta {
  int split = 0;
  double delta = 0.0;
};

// Highest validation AUPRC per (split, model key); earliest run wins ties.
// Only validation scores are consulted.
std::vector<RunRecord> select_best(const std::vector<RunRecord>& runs);

// test AUPRC(best a) - test AUPRC(best b) for every split. Throws if either
// key is missing from a split that the other has.
std::vector<Delta> pairwise_deltas(const ResultTable& table, const std::string& a,
                                   const std::string& b);

// Interquartile range of test AUPRC across the grid cells of `key`, one
// value per split.
std::vector<double> grid_spread(const ResultTable& table, const std::string& key);

double median(std::vector<double> values);
// Linear-interpolation quantile, q in [0,1].
double quantile(std::vector<double> values, double q);

// Cohort, labels and encodings shared by every run.
struct PreparedData {
  std::vector<PatientRecord> records;
  cohort::CodeVocabulary vocab;
  cohort::LabeledDataset dataset;  // all eligible phecode columns
  std::vector<cohort::TaskPrevalence> task_pool;
  std::vector<std::vector<std::string>> aux_sets;  // fixed draw, nested
  ruledsl::PhenotypeDefinition target;
};

PreparedData prepare_data(const ExperimentConfig& config);

// Nested auxiliary task sets for a split (the fixed draw unless the config
// asks for per-split draws).
std::vector<std::vector<std::string>> auxiliary_sets_for_split(
    const ExperimentConfig& config, const PreparedData& data, int split);

// One trained model with its artifacts.
struct SingleRun {
  RunRecord record;
  std::optional<nnet::ModelParams> network;
  nnet::TrainHistory history;
  std::optional<logreg::FitResult> linear;
  std::vector<double> test_scores;
};

// Trains `family` ("STNN", "MTNN" or "LR") on one split. `aux_sets` are the
// nested auxiliary sets of that split; `cell` indexes expand_grid() and is
// ignored for LR.
SingleRun run_single(const ExperimentConfig& config, const cohort::DatasetSplit& split,
                     const std::vector<std::vector<std::string>>& aux_sets, int split_index,
                     const std::string& family, int aux_size, int cell);

struct RunOptions {
  int threads = 1;
  std::function<void(const std::string&)> progress;
};

ResultTable run_experiment(const ExperimentConfig& config, const PreparedData& data,
                           const RunOptions& options);
ResultTable run_experiment(const ExperimentConfig& config);

uint64_t split_seed(uint64_t master, int split);
uint64_t run_seed(uint64_t master, int split, const std::string& model_key, int cell);

// CSV header: split,family,layers,width,lr,aux_size,val_auprc,test_auprc,seed,wall_ms
void write_runs_csv(const std::vector<RunRecord>& runs, std::ostream& out);
std::vector<RunRecord> read_runs_csv(std::istream& in);
void write_failures_csv(const std::vector<FailedRun>& failures, std::ostream& out);
std::vector<FailedRun> read_failures_csv(std::istream& in);
// split,a,b,delta
void write_deltas_csv(const std::vector<Delta>& deltas, const std::string& a,
                      const std::string& b, std::ostream& out);

// JSON summary with the serialized config echoed verbatim.
std::string summary_json(const ResultTable& table, const ExperimentConfig& config);

// Writes runs.csv, best.csv, failures.csv, deltas.csv and summary.json.
void export_table(const ResultTable& table, const ExperimentConfig& config,
                  const std::string& directory);
ResultTable import_table(const std::string& directory);

}  // namespace phenomtl::harness

#endif  // PHENOMTL_HARNESS_H_

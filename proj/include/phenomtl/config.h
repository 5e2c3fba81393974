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

// Experiment configuration and its key-value text format.
//
// One "key = value" per line, '#' starts a comment line. List values are
// comma-separated. Keys marked (repeatable) may appear several times and
// each occurrence appends one entry.
//
//   seed                 master seed for every random choice
//   cohort_file          cohort to load; when empty the generator.* keys are used
//   definitions_file     rule DSL file
//   definition           inline definition (repeatable)
//   target               name of the target phenotype
//   phecodes_file        phecode groupings file
//   phecode              inline grouping "NAME CODE CODE ..." (repeatable)
//   aux_prevalence       "lo,hi" bounds for auxiliary task prevalence
//   aux_sizes            ascending nested set sizes, e.g. 5,10,20
//   aux_per_split        0: one auxiliary draw for all splits, 1: redraw per split
//   n_splits             number of random splits
//   split_fractions      train,validation,test
//   layers               hidden-layer counts in the grid
//   widths               hidden widths in the grid
//   learning_rates       Adam learning rates in the grid
//   epochs, batch_size   network training
//   families             subset of STNN,MTNN,LR
//   lambdas              L1 grid, descending
//   l1_max_iterations, l1_tolerance
//   threads              concurrent runs
//   generator.n_patients, generator.noise_codes, generator.repeat_probability,
//   generator.max_count
//   generator.noise_frequency   "lo,hi"
//   generator.age_range         "min,max"
//   generator.genders, generator.races, generator.ethnicities
//   generator.code       "NS:code frequency" (repeatable)
//   generator.bundle     "NAME probability keep CODE CODE ..." (repeatable)

#ifndef PHENOMTL_CONFIG_H_
#define PHENOMTL_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "phenomtl/cohort.h"

namespace phenomtl::harness {

struct ExperimentConfig {
  uint64_t seed = 1;
  std::string cohort_file;
  cohort::GeneratorConfig generator;
  std::string definitions_file;
  std::vector<std::string> definitions;
  std::string target;
  std::string phecodes_file;
  std::vector<std::string> phecodes;
  double aux_prevalence_min = 0.0008;
  double aux_prevalence_max = 0.0295;
  std::vector<int> aux_sizes = {5, 10, 20};
  bool aux_per_split = false;
  int n_splits = 10;
  cohort::SplitFractions fractions;
  std::vector<int> layers = {1, 2};
  std::vector<int> widths = {128, 256, 512, 1024, 2048};
  std::vector<double> learning_rates = {1e-4, 5e-5};
  int epochs = 6;
  int batch_size = 256;
  std::vector<std::string> families = {"STNN", "MTNN", "LR"};
  std::vector<double> lambdas;  // empty: the L1 default grid
  int l1_max_iterations = 20000;
  double l1_tolerance = 1e-12;
  int threads = 1;

  bool has_family(std::string_view family) const;
  void validate() const;
};

// Canonical text: every key in a fixed order, doubles with 17 significant
// digits. parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig& config);
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

// Applies one "key = value" assignment (the same keys as the file format).
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

}  // namespace phenomtl::harness

#endif  // PHENOMTL_CONFIG_H_

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

// L1-regularised logistic regression baseline.
//
// Minimises mean logistic loss + lambda * ||w||_1 (intercept unpenalised)
// by proximal gradient with a fixed step 1/L, where
// L = ||[X 1]||_F^2 / (4n) bounds the Lipschitz constant of the loss
// gradient. A descending lambda grid is solved with warm starts and the
// model with the best validation AUPRC is kept.

#ifndef PHENOMTL_LOGREG_H_
#define PHENOMTL_LOGREG_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phenomtl/cohort.h"

namespace phenomtl::logreg {

struct L1Config {
  std::vector<double> lambdas = default_grid();  // positive, descending
  int max_iterations = 20000;
  double tolerance = 1e-12;  // on the per-iteration objective decrease

  // `points` values log-spaced from `high` down to `low`.
  static std::vector<double> default_grid(double high = 1e-1, double low = 1e-5,
                                          int points = 10);
  void validate() const;
};

struct LinearModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double lambda = 0.0;

  size_t nonzeros() const;
};

struct PathPoint {
  double lambda = 0.0;
  double validation_auprc = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  size_t nonzeros = 0;
};

struct FitResult {
  LinearModel model;
  std::vector<PathPoint> path;
  size_t selected = 0;
  bool converged = true;   // of the selected model
  std::string diagnostic;  // non-empty when the selected fit hit max_iterations
};

struct SolveResult {
  LinearModel model;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

double soft_threshold(double w, double t);

double lipschitz_bound(std::span<const cohort::FeatureVector> features);

// Mean logistic loss (no penalty).
double logistic_loss(const LinearModel& model,
                     std::span<const cohort::FeatureVector> features,
                     std::span<const uint8_t> labels);

double objective(const LinearModel& model,
                 std::span<const cohort::FeatureVector> features,
                 std::span<const uint8_t> labels, double lambda);

// Gradient of the mean logistic loss; the intercept component is returned
// through `intercept_grad`.
Eigen::VectorXd loss_gradient(const LinearModel& model,
                              std::span<const cohort::FeatureVector> features,
                              std::span<const uint8_t> labels, double* intercept_grad);

// Proximal gradient for one lambda starting from `start`. When
// `objective_trace` is given it receives the objective before the first and
// after every iteration.
SolveResult solve_l1(std::span<const cohort::FeatureVector> features,
                     std::span<const uint8_t> labels, double lambda,
                     const LinearModel& start, const L1Config& config,
                     std::vector<double>* objective_trace = nullptr);

// Throws std::invalid_argument if the training target has a single class.
FitResult fit_l1(const cohort::LabeledDataset& train,
                 const cohort::LabeledDataset& validation, const L1Config& config);

double predict_proba(const LinearModel& model, const cohort::FeatureVector& features);
std::vector<double> predict_proba(const LinearModel& model,
                                  std::span<const cohort::FeatureVector> features);

// "intercept\t<b>", "lambda\t<l>", then "<feature name>\t<weight>" for each
// non-zero weight.
void export_model(const LinearModel& model, const cohort::CodeVocabulary& vocab,
                  std::ostream& out);

}  // namespace phenomtl::logreg

#endif  // PHENOMTL_LOGREG_H_

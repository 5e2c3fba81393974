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

#include "phenomtl/logreg.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "phenomtl/metrics.h"

namespace phenomtl::logreg {
namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double margin(const LinearModel& model, const cohort::FeatureVector& fv) {
  double z = model.intercept;
  for (const auto i : fv.indices) z += model.weights[i];
  return z;
}

void check_shapes(const LinearModel& model, std::span<const cohort::FeatureVector> features,
                  std::span<const uint8_t> labels) {
  if (features.size() != labels.size()) {
    throw std::invalid_argument("feature and label counts differ");
  }
  for (const auto& fv : features) {
    if (static_cast<Eigen::Index>(fv.dimension) != model.weights.size()) {
      throw std::invalid_argument("feature dimension does not match the model");
    }
  }
}

double loss_from_margins(std::span<const double> z, std::span<const uint8_t> labels) {
  double loss = 0.0;
  for (size_t n = 0; n < z.size(); ++n) loss += softplus(z[n]) - labels[n] * z[n];
  return loss / static_cast<double>(z.size());
}

}  // namespace

std::vector<double> L1Config::default_grid(double high, double low, int points) {
  if (points < 1 || !(high >= low) || !(low > 0)) {
    throw std::invalid_argument("bad lambda grid bounds");
  }
  std::vector<double> grid;
  for (int k = 0; k < points; ++k) {
    const double frac = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
    grid.push_back(std::exp(std::log(high) + frac * (std::log(low) - std::log(high))));
  }
  return grid;
}

void L1Config::validate() const {
  if (lambdas.empty()) throw std::invalid_argument("lambda grid is empty");
  for (size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0)) throw std::invalid_argument("lambda values must be positive");
    if (i > 0 && lambdas[i] > lambdas[i - 1]) {
      throw std::invalid_argument("lambda grid must be descending");
    }
  }
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(tolerance > 0)) throw std::invalid_argument("tolerance must be positive");
}

size_t LinearModel::nonzeros() const {
  return static_cast<size_t>((weights.array() != 0.0).count());
}

double soft_threshold(double w, double t) {
  if (t < 0) throw std::invalid_argument("soft threshold needs t >= 0");
  if (w > t) return w - t;
  if (w < -t) return w + t;
  return 0.0;
}

double lipschitz_bound(std::span<const cohort::FeatureVector> features) {
  if (features.empty()) throw std::invalid_argument("no training rows");
  double frob = 0.0;
  for (const auto& fv : features) frob += static_cast<double>(fv.indices.size()) + 1.0;
  return frob / (4.0 * static_cast<double>(features.size()));
}

double logistic_loss(const LinearModel& model,
                     std::span<const cohort::FeatureVector> features,
                     std::span<const uint8_t> labels) {
  check_shapes(model, features, labels);
  std::vector<double> z(features.size());
  for (size_t n = 0; n < features.size(); ++n) z[n] = margin(model, features[n]);
  return loss_from_margins(z, labels);
}

double objective(const LinearModel& model,
                 std::span<const cohort::FeatureVector> features,
                 std::span<const uint8_t> labels, double lambda) {
  return logistic_loss(model, features, labels) + lambda * model.weights.lpNorm<1>();
}

Eigen::VectorXd loss_gradient(const LinearModel& model,
                              std::span<const cohort::FeatureVector> features,
                              std::span<const uint8_t> labels, double* intercept_grad) {
  check_shapes(model, features, labels);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.weights.size());
  double g0 = 0.0;
  const double inv_n = 1.0 / static_cast<double>(features.size());
  for (size_t n = 0; n < features.size(); ++n) {
    const double r = (sigmoid(margin(model, features[n])) - labels[n]) * inv_n;
    g0 += r;
    for (const auto i : features[n].indices) grad[i] += r;
  }
  if (intercept_grad != nullptr) *intercept_grad = g0;
  return grad;
}

SolveResult solve_l1(std::span<const cohort::FeatureVector> features,
                     std::span<const uint8_t> labels, double lambda,
                     const LinearModel& start, const L1Config& config,
                     std::vector<double>* objective_trace) {
  check_shapes(start, features, labels);
  const double step = 1.0 / lipschitz_bound(features);
  const double inv_n = 1.0 / static_cast<double>(features.size());

  SolveResult res;
  res.model = start;
  res.model.lambda = lambda;
  LinearModel& m = res.model;
  std::vector<double> z(features.size());
  auto refresh = [&]() {
    for (size_t n = 0; n < features.size(); ++n) z[n] = margin(m, features[n]);
    return loss_from_margins(z, labels) + lambda * m.weights.lpNorm<1>();
  };
  double obj = refresh();
  if (objective_trace != nullptr) objective_trace->push_back(obj);

  Eigen::VectorXd grad(m.weights.size());
  for (int it = 1; it <= config.max_iterations; ++it) {
    grad.setZero();
    double g0 = 0.0;
    for (size_t n = 0; n < features.size(); ++n) {
      const double r = (sigmoid(z[n]) - labels[n]) * inv_n;
      g0 += r;
      for (const auto i : features[n].indices) grad[i] += r;
    }
    for (Eigen::Index j = 0; j < m.weights.size(); ++j) {
      m.weights[j] = soft_threshold(m.weights[j] - step * grad[j], step * lambda);
    }
    m.intercept -= step * g0;
    const double next = refresh();
    if (objective_trace != nullptr) objective_trace->push_back(next);
    res.iterations = it;
    const double decrease = obj - next;
    obj = next;
    if (decrease < config.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.objective = obj;
  return res;
}

FitResult fit_l1(const cohort::LabeledDataset& train,
                 const cohort::LabeledDataset& validation, const L1Config& config) {
  config.validate();
  const auto positives = std::count(train.target.begin(), train.target.end(), uint8_t{1});
  if (positives == 0 || positives == static_cast<long>(train.size())) {
    throw std::invalid_argument("L1 logistic regression needs both classes in training");
  }
  if (validation.dimension != train.dimension) {
    throw std::invalid_argument("train/validation feature dimensions differ");
  }
  const double base = static_cast<double>(positives) / static_cast<double>(train.size());
  LinearModel start;
  start.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(train.dimension));
  start.intercept = std::log(base / (1.0 - base));

  FitResult out;
  double best = -1.0;
  for (const double lambda : config.lambdas) {
    const auto solved = solve_l1(train.features, train.target, lambda, start, config);
    start = solved.model;
    PathPoint point;
    point.lambda = lambda;
    point.objective = solved.objective;
    point.iterations = solved.iterations;
    point.converged = solved.converged;
    point.nonzeros = solved.model.nonzeros();
    point.validation_auprc =
        metrics::auprc(predict_proba(solved.model, validation.features), validation.target);
    if (point.validation_auprc > best) {
      best = point.validation_auprc;
      out.model = solved.model;
      out.selected = out.path.size();
    }
    out.path.push_back(point);
  }
  out.converged = out.path[out.selected].converged;
  if (!out.converged) {
    char buffer[128];
    std::snprintf(buffer, sizeof(buffer),
                  "lambda %.3g stopped at max_iterations (%d) before converging",
                  out.path[out.selected].lambda, config.max_iterations);
    out.diagnostic = buffer;
  }
  return out;
}

double predict_proba(const LinearModel& model, const cohort::FeatureVector& features) {
  if (static_cast<Eigen::Index>(features.dimension) != model.weights.size()) {
    throw std::invalid_argument("feature dimension does not match the model");
  }
  return sigmoid(margin(model, features));
}

std::vector<double> predict_proba(const LinearModel& model,
                                  std::span<const cohort::FeatureVector> features) {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& fv : features) out.push_back(predict_proba(model, fv));
  return out;
}

void export_model(const LinearModel& model, const cohort::CodeVocabulary& vocab,
                  std::ostream& out) {
  if (static_cast<Eigen::Index>(vocab.size()) != model.weights.size()) {
    throw std::invalid_argument("vocabulary size does not match the model");
  }
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", model.intercept);
  out << "intercept\t" << buffer << '\n';
  std::snprintf(buffer, sizeof(buffer), "%.17g", model.lambda);
  out << "lambda\t" << buffer << '\n';
  for (Eigen::Index j = 0; j < model.weights.size(); ++j) {
    if (model.weights[j] == 0.0) continue;
    std::snprintf(buffer, sizeof(buffer), "%.17g", model.weights[j]);
    out << vocab.name(static_cast<size_t>(j)) << '\t' << buffer << '\n';
  }
}

}  // namespace phenomtl::logreg

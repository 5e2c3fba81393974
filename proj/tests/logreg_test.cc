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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kkt.h"

namespace phenomtl::logreg {
namespace {

// Target driven by features 0 (positive) and 1 (negative), with label noise.
cohort::LabeledDataset noisy(size_t n, int dim, double base, uint64_t seed) {
  Rng rng(seed);
  cohort::LabeledDataset d;
  d.dimension = static_cast<size_t>(dim);
  for (size_t i = 0; i < n; ++i) {
    cohort::FeatureVector fv;
    fv.dimension = d.dimension;
    for (int c = 0; c < dim; ++c) {
      if (rng.bernoulli(0.25)) fv.indices.push_back(static_cast<uint32_t>(c));
    }
    const bool f0 = !fv.indices.empty() && fv.indices.front() == 0;
    const bool f1 = std::find(fv.indices.begin(), fv.indices.end(), 1u) != fv.indices.end();
    double logit = std::log(base / (1 - base)) + (f0 ? 2.5 : 0.0) - (f1 ? 1.5 : 0.0);
    d.ids.push_back(static_cast<int64_t>(i));
    d.target.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(-logit))) ? 1 : 0);
    d.features.push_back(std::move(fv));
  }
  return d;
}

TEST(SoftThreshold, Values) {
  EXPECT_EQ(soft_threshold(3.0, 1.0), 2.0);
  EXPECT_EQ(soft_threshold(-3.0, 1.0), -2.0);
  EXPECT_EQ(soft_threshold(0.5, 1.0), 0.0);
  EXPECT_EQ(soft_threshold(-1.0, 1.0), 0.0);
  EXPECT_EQ(soft_threshold(2.0, 0.0), 2.0);
}

TEST(Grid, DefaultIsLogSpacedAndDescending) {
  const auto g = L1Config::default_grid();
  ASSERT_EQ(g.size(), 10u);
  EXPECT_DOUBLE_EQ(g.front(), 1e-1);
  EXPECT_NEAR(g.back(), 1e-5, 1e-18);
  for (size_t i = 1; i < g.size(); ++i) {
    EXPECT_NEAR(std::log10(g[i - 1] / g[i]), 4.0 / 9.0, 1e-12);
  }
  L1Config bad;
  bad.lambdas = {1e-3, 1e-2};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad.lambdas = {0.1, -1.0};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Lipschitz, BoundIncludesIntercept) {
  std::vector<cohort::FeatureVector> rows = {{{0, 2}, 3}, {{1}, 3}, {{}, 3}, {{0, 1, 2}, 3}};
  // (nnz + n) / (4 n) with nnz = 6, n = 4.
  EXPECT_DOUBLE_EQ(lipschitz_bound(rows), 10.0 / 16.0);
}

TEST(Loss, HandComputedPrediction) {
  LinearModel m;
  m.weights = Eigen::VectorXd::Zero(3);
  m.weights << 0.5, -1.0, 2.0;
  m.intercept = -0.25;
  const cohort::FeatureVector x{{0, 2}, 3};
  EXPECT_NEAR(predict_proba(m, x), 1.0 / (1.0 + std::exp(-2.25)), 1e-15);
  const cohort::FeatureVector y{{1}, 3};
  EXPECT_NEAR(predict_proba(m, y), 1.0 / (1.0 + std::exp(1.25)), 1e-15);
  const std::vector<cohort::FeatureVector> rows = {x, y};
  const std::vector<uint8_t> labels = {1, 0};
  const double expected =
      0.5 * (std::log1p(std::exp(-2.25)) + std::log1p(std::exp(-1.25)));
  EXPECT_NEAR(logistic_loss(m, rows, labels), expected, 1e-15);
  EXPECT_NEAR(objective(m, rows, labels, 0.1), expected + 0.1 * 3.5, 1e-15);
  EXPECT_THROW(predict_proba(m, cohort::FeatureVector{{0}, 4}), std::invalid_argument);
}

TEST(Solver, LargeLambdaGivesZeroWeights) {
  const auto d = noisy(2000, 20, 0.03, 1);
  LinearModel start;
  start.weights = Eigen::VectorXd::Zero(20);
  const auto r = solve_l1(d.features, d.target, 0.1, start, L1Config{});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.model.nonzeros(), 0u);
  const double rate = d.prevalence();
  EXPECT_NEAR(r.model.intercept, std::log(rate / (1 - rate)), 1e-4);
}

TEST(Solver, SatisfiesOptimalityConditions) {
  const auto d = noisy(1500, 15, 0.2, 2);
  for (const double lambda : {1e-1, 1e-2, 1e-3, 1e-4}) {
    LinearModel start;
    start.weights = Eigen::VectorXd::Zero(15);
    std::vector<double> trace;
    const auto r = solve_l1(d.features, d.target, lambda, start, L1Config{}, &trace);
    ASSERT_TRUE(r.converged) << lambda;
    EXPECT_LT(phenomtl::testing::kkt_violation(r.model, d.features, d.target, lambda), 1e-4)
        << lambda;
    for (size_t i = 1; i < trace.size(); ++i) {
      ASSERT_LE(trace[i], trace[i - 1] + 1e-15) << "iteration " << i;
    }
    EXPECT_DOUBLE_EQ(trace.back(), r.objective);
  }
}

TEST(Solver, SparsityGrowsAsLambdaShrinks) {
  const auto d = noisy(3000, 25, 0.1, 3);
  const auto fit = fit_l1(d, noisy(1000, 25, 0.1, 4), L1Config{});
  ASSERT_EQ(fit.path.size(), 10u);
  EXPECT_EQ(fit.path.front().nonzeros, 0u);
  EXPECT_GT(fit.path.back().nonzeros, fit.path[3].nonzeros);
  const auto& m = fit.model;
  EXPECT_GT(m.weights[0], 0.0);
  EXPECT_LT(m.weights[1], 0.0);
  for (size_t i = 0; i < fit.path.size(); ++i) {
    EXPECT_LE(fit.path[i].validation_auprc, fit.path[fit.selected].validation_auprc);
  }
  for (size_t i = 0; i < fit.selected; ++i) {
    EXPECT_LT(fit.path[i].validation_auprc, fit.path[fit.selected].validation_auprc);
  }
  EXPECT_EQ(m.lambda, fit.path[fit.selected].lambda);
  EXPECT_TRUE(fit.converged);
  EXPECT_TRUE(fit.diagnostic.empty());
}

TEST(Solver, SeparableDataStaysFinite) {
  cohort::LabeledDataset d;
  d.dimension = 2;
  for (int i = 0; i < 40; ++i) {
    d.ids.push_back(i);
    d.features.push_back(i % 4 == 0 ? cohort::FeatureVector{{0}, 2}
                                    : cohort::FeatureVector{{1}, 2});
    d.target.push_back(i % 4 == 0 ? 1 : 0);
  }
  const auto fit = fit_l1(d, d, L1Config{});
  EXPECT_TRUE(std::isfinite(fit.model.weights[0]));
  EXPECT_GT(predict_proba(fit.model, d.features[0]), predict_proba(fit.model, d.features[1]));
  EXPECT_EQ(fit.path[fit.selected].validation_auprc, 1.0);
}

TEST(Solver, ReportsNonConvergence) {
  const auto d = noisy(500, 10, 0.2, 5);
  L1Config cfg;
  cfg.lambdas = {1e-4};
  cfg.max_iterations = 3;
  const auto fit = fit_l1(d, d, cfg);
  EXPECT_FALSE(fit.converged);
  EXPECT_NE(fit.diagnostic.find("max_iterations"), std::string::npos);
}

TEST(Solver, RejectsSingleClass) {
  auto d = noisy(100, 4, 0.2, 6);
  std::fill(d.target.begin(), d.target.end(), uint8_t{0});
  EXPECT_THROW(fit_l1(d, d, L1Config{}), std::invalid_argument);
}

TEST(Export, ListsNonZeroWeights) {
  LinearModel m;
  m.weights = Eigen::VectorXd::Zero(3);
  m.weights << 0.0, -1.5, 0.25;
  m.intercept = -2.0;
  m.lambda = 0.01;
  const auto vocab = cohort::CodeVocabulary::from_names({"ICD9:1", "ICD9:2", "RX:3"});
  std::ostringstream out;
  export_model(m, vocab, out);
  EXPECT_EQ(out.str(),
            "intercept\t-2\nlambda\t0.01\nICD9:2\t-1.5\nRX:3\t0.25\n");
}

}  // namespace
}  // namespace phenomtl::logreg

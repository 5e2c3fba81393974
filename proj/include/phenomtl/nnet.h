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

// Feed-forward networks with a shared trunk and one sigmoid head per task.
//
// Each hidden layer is affine -> batch norm -> ReLU. Head 0 is the target
// task; heads 1..k are auxiliary tasks. A single-task network is the
// one-head case of the same code path. Everything is double precision.

#ifndef PHENOMTL_NNET_H_
#define PHENOMTL_NNET_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phenomtl/cohort.h"

namespace phenomtl::nnet {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;
inline constexpr double kLossClip = 1e-7;
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.99;
inline constexpr double kAdamEpsilon = 1e-8;

struct NetworkSpec {
  int input_dim = 0;
  std::vector<int> hidden_sizes;  // one or two layers
  int n_heads = 1;
  bool batch_norm = true;

  void validate() const;
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct HiddenLayer {
  Matrix weight;  // fan_in x fan_out
  Vector bias;
  Vector gamma;
  Vector beta;
  Vector running_mean;
  Vector running_var;
};

struct ModelParams {
  NetworkSpec spec;
  uint64_t seed = 0;
  std::vector<HiddenLayer> layers;
  Matrix head_weight;  // last width x n_heads; column h is head h
  Vector head_bias;    // n_heads
};

// Same shapes as the trainable part of ModelParams.
struct LayerGradients {
  Matrix weight;
  Vector bias;
  Vector gamma;
  Vector beta;
};

struct Gradients {
  std::vector<LayerGradients> layers;
  Matrix head_weight;
  Vector head_bias;

  static Gradients zeros_like(const ModelParams& params);
};

// Xavier/Glorot uniform bound sqrt(6 / (fan_in + fan_out)).
double xavier_limit(int fan_in, int fan_out);

// Weights ~ U[-L, L] per layer; biases 0; gamma 1, beta 0; running mean 0,
// running variance 1.
ModelParams init_params(const NetworkSpec& spec, uint64_t seed);

// Rows fed to the network: either multi-hot sparse rows (only active columns
// are gathered) or a dense matrix.
class Batch {
 public:
  static Batch sparse(std::span<const cohort::FeatureVector> rows);
  static Batch sparse(std::span<const cohort::FeatureVector> all,
                      std::span<const size_t> rows);
  static Batch dense(Matrix rows);

  size_t size() const;
  bool is_sparse() const { return dense_.size() == 0 && !sparse_.empty(); }

  // rows * weight + bias
  Matrix affine(const Matrix& weight, const Vector& bias) const;
  // Adds rows^T * upstream into `grad`.
  void accumulate_weight_gradient(const Matrix& upstream, Matrix& grad) const;

 private:
  std::vector<const cohort::FeatureVector*> sparse_;
  Matrix dense_;
};

enum class Mode { kTrain, kEval };

struct LayerCache {
  Matrix input;       // activation entering the layer (unused for layer 0)
  Matrix normalized;  // batch-norm x-hat
  Vector batch_mean;
  Vector batch_var;   // biased batch variance
  Vector inv_std;
  Matrix pre_activation;  // input to the ReLU
  Matrix output;
};

struct ForwardResult {
  Mode mode = Mode::kEval;
  std::vector<LayerCache> layers;
  Matrix logits;         // N x n_heads
  Matrix probabilities;  // N x n_heads, in (0, 1)
};

// Train mode uses batch statistics and needs >= 2 rows; eval mode uses the
// running statistics. Does not modify `params`.
ForwardResult forward(const ModelParams& params, const Batch& batch, Mode mode);

// Folds the batch statistics of a train-mode pass into the running
// statistics (momentum kBatchNormMomentum, unbiased variance).
void update_running_stats(ModelParams& params, const ForwardResult& cache);

// sum_h w_h * mean_n BCE(p_nh, y_nh) with p clipped to [kLossClip,
// 1 - kLossClip]. Empty `head_weights` means w_h = 1/H.
double multitask_loss(const Matrix& probabilities, const Matrix& labels,
                      std::span<const double> head_weights = {});

// Gradients of multitask_loss for a train-mode forward pass.
Gradients backward(const ModelParams& params, const Batch& batch,
                   const ForwardResult& cache, const Matrix& labels,
                   std::span<const double> head_weights = {});

struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = kAdamBeta1;
  double beta2 = kAdamBeta2;
  double epsilon = kAdamEpsilon;
  int64_t step = 0;
  Gradients first_moment;
  Gradients second_moment;

  static AdamState for_params(const ModelParams& params, double learning_rate);
};

// One Adam update of a flat tensor; `step` is the already-incremented t.
void adam_update(std::span<double> theta, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, int64_t step,
                 double learning_rate, double beta1 = kAdamBeta1,
                 double beta2 = kAdamBeta2, double epsilon = kAdamEpsilon);

// Increments the step counter, then updates every trainable tensor.
void adam_step(AdamState& state, ModelParams& params, const Gradients& grads);

struct TrainConfig {
  int epochs = 6;
  int batch_size = 256;
  double learning_rate = 1e-4;
  uint64_t seed = 1;
  std::vector<double> head_weights;  // empty: uniform

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> validation_auprc;
  int selected_epoch = -1;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// N x (1 + k) label matrix: target, then auxiliary columns.
Matrix label_matrix(const cohort::LabeledDataset& data, std::span<const size_t> rows);

// Shuffled mini-batch Adam for `config.epochs` epochs. After every epoch the
// target head is scored on `validation` (AUPRC); the parameters of the best
// epoch (earliest on ties) are returned. Auxiliary heads come from
// `train.auxiliary`, so spec.n_heads must equal 1 + train.auxiliary.size().
TrainResult train(const NetworkSpec& spec, const cohort::LabeledDataset& train,
                  const cohort::LabeledDataset& validation, const TrainConfig& config);

// Eval-mode probabilities of every head (N x n_heads).
Matrix predict_heads(const ModelParams& params,
                     std::span<const cohort::FeatureVector> features);
// Eval-mode probabilities of the target head.
std::vector<double> predict(const ModelParams& params,
                            std::span<const cohort::FeatureVector> features);

// Versioned text checkpoint. Values are written with 17 significant digits,
// so a load reproduces every parameter exactly.
void save_checkpoint(const ModelParams& params, std::ostream& out);
ModelParams load_checkpoint(std::istream& in);

}  // namespace phenomtl::nnet

#endif  // PHENOMTL_NNET_H_

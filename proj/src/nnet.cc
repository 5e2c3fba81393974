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

#include "phenomtl/nnet.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "phenomtl/metrics.h"

namespace phenomtl::nnet {
namespace {

constexpr std::string_view kCheckpointMagic = "phenomtl-checkpoint";
constexpr int kCheckpointVersion = 1;
constexpr size_t kPredictChunk = 4096;

template <typename M>
void fill_uniform(Rng& rng, double limit, M&& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-limit, limit);
  }
}

std::vector<double> resolve_head_weights(std::span<const double> weights, Eigen::Index heads) {
  if (weights.empty()) return std::vector<double>(static_cast<size_t>(heads), 1.0 / heads);
  if (static_cast<Eigen::Index>(weights.size()) != heads) {
    throw std::invalid_argument("head weight count does not match number of heads");
  }
  return {weights.begin(), weights.end()};
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Visits (param, grad, m, v) tensors in a fixed order.
template <typename F>
void for_each_tensor(ModelParams& p, const Gradients& g, Gradients& m, Gradients& v, F&& f) {
  auto flat = [](auto& t) { return std::span<double>(t.data(), static_cast<size_t>(t.size())); };
  auto cflat = [](const auto& t) {
    return std::span<const double>(t.data(), static_cast<size_t>(t.size()));
  };
  for (size_t l = 0; l < p.layers.size(); ++l) {
    f(flat(p.layers[l].weight), cflat(g.layers[l].weight), flat(m.layers[l].weight), flat(v.layers[l].weight));
    f(flat(p.layers[l].bias), cflat(g.layers[l].bias), flat(m.layers[l].bias), flat(v.layers[l].bias));
    if (p.spec.batch_norm) {
      f(flat(p.layers[l].gamma), cflat(g.layers[l].gamma), flat(m.layers[l].gamma), flat(v.layers[l].gamma));
      f(flat(p.layers[l].beta), cflat(g.layers[l].beta), flat(m.layers[l].beta), flat(v.layers[l].beta));
    }
  }
  f(flat(p.head_weight), cflat(g.head_weight), flat(m.head_weight), flat(v.head_weight));
  f(flat(p.head_bias), cflat(g.head_bias), flat(m.head_bias), flat(v.head_bias));
}

void check_dimension(const ModelParams& params, std::span<const cohort::FeatureVector> rows) {
  for (const auto& fv : rows) {
    if (static_cast<int>(fv.dimension) != params.spec.input_dim) {
      throw std::invalid_argument("feature dimension " + std::to_string(fv.dimension) +
                                  " does not match network input " +
                                  std::to_string(params.spec.input_dim));
    }
  }
}

void write_tensor(std::ostream& out, const std::string& name, const double* data,
                  Eigen::Index rows, Eigen::Index cols) {
  out << "tensor " << name << ' ' << rows << ' ' << cols << '\n';
  char buffer[32];
  for (Eigen::Index i = 0; i < rows * cols; ++i) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", data[i]);
    out << buffer << ((i + 1) % cols == 0 ? '\n' : ' ');
  }
}

template <typename T>
void read_tensor(std::istream& in, const std::string& expected, T& tensor) {
  std::string keyword;
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  if (!(in >> keyword >> name >> rows >> cols) || keyword != "tensor" || name != expected) {
    throw std::runtime_error("checkpoint: expected tensor " + expected);
  }
  if (rows != tensor.rows() || cols != tensor.cols()) {
    throw std::runtime_error("checkpoint: shape mismatch for " + expected);
  }
  std::string token;
  for (Eigen::Index i = 0; i < rows * cols; ++i) {
    if (!(in >> token)) throw std::runtime_error("checkpoint: truncated tensor " + expected);
    tensor.data()[i] = std::strtod(token.c_str(), nullptr);
  }
}

}  // namespace

void NetworkSpec::validate() const {
  if (input_dim <= 0) throw std::invalid_argument("input_dim must be positive");
  if (hidden_sizes.empty() || hidden_sizes.size() > 2) {
    throw std::invalid_argument("networks have one or two hidden layers");
  }
  for (const int w : hidden_sizes) {
    if (w <= 0) throw std::invalid_argument("hidden widths must be positive");
  }
  if (n_heads < 1) throw std::invalid_argument("n_heads must be >= 1");
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  for (const auto& layer : params.layers) {
    g.layers.push_back(LayerGradients{
        Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
        Vector::Zero(layer.bias.size()), Vector::Zero(layer.gamma.size()),
        Vector::Zero(layer.beta.size())});
  }
  g.head_weight = Matrix::Zero(params.head_weight.rows(), params.head_weight.cols());
  g.head_bias = Vector::Zero(params.head_bias.size());
  return g;
}

double xavier_limit(int fan_in, int fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

ModelParams init_params(const NetworkSpec& spec, uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ModelParams p;
  p.spec = spec;
  p.seed = seed;
  int fan_in = spec.input_dim;
  for (const int width : spec.hidden_sizes) {
    HiddenLayer layer;
    layer.weight.resize(fan_in, width);
    fill_uniform(rng, xavier_limit(fan_in, width), layer.weight);
    layer.bias = Vector::Zero(width);
    layer.gamma = Vector::Ones(width);
    layer.beta = Vector::Zero(width);
    layer.running_mean = Vector::Zero(width);
    layer.running_var = Vector::Ones(width);
    p.layers.push_back(std::move(layer));
    fan_in = width;
  }
  // Every head is its own width x 1 output layer; head 0 is drawn first so
  // it does not depend on how many auxiliary heads follow.
  p.head_weight.resize(fan_in, spec.n_heads);
  for (int h = 0; h < spec.n_heads; ++h) {
    fill_uniform(rng, xavier_limit(fan_in, 1), p.head_weight.col(h));
  }
  p.head_bias = Vector::Zero(spec.n_heads);
  return p;
}

Batch Batch::sparse(std::span<const cohort::FeatureVector> rows) {
  Batch b;
  b.sparse_.reserve(rows.size());
  for (const auto& fv : rows) b.sparse_.push_back(&fv);
  return b;
}

Batch Batch::sparse(std::span<const cohort::FeatureVector> all, std::span<const size_t> rows) {
  Batch b;
  b.sparse_.reserve(rows.size());
  for (const size_t r : rows) b.sparse_.push_back(&all[r]);
  return b;
}

Batch Batch::dense(Matrix rows) {
  Batch b;
  b.dense_ = std::move(rows);
  return b;
}

size_t Batch::size() const {
  return dense_.size() > 0 ? static_cast<size_t>(dense_.rows()) : sparse_.size();
}

Matrix Batch::affine(const Matrix& weight, const Vector& bias) const {
  if (dense_.size() > 0) {
    if (dense_.cols() != weight.rows()) throw std::invalid_argument("input dimension mismatch");
    Matrix z = dense_ * weight;
    z.rowwise() += bias.transpose();
    return z;
  }
  Matrix z(static_cast<Eigen::Index>(sparse_.size()), weight.cols());
  for (size_t n = 0; n < sparse_.size(); ++n) {
    auto row = z.row(static_cast<Eigen::Index>(n));
    row = bias.transpose();
    for (const auto i : sparse_[n]->indices) {
      if (i >= weight.rows()) throw std::invalid_argument("input dimension mismatch");
      row += weight.row(i);
    }
  }
  return z;
}

void Batch::accumulate_weight_gradient(const Matrix& upstream, Matrix& grad) const {
  if (dense_.size() > 0) {
    grad.noalias() += dense_.transpose() * upstream;
    return;
  }
  for (size_t n = 0; n < sparse_.size(); ++n) {
    const auto row = upstream.row(static_cast<Eigen::Index>(n));
    for (const auto i : sparse_[n]->indices) grad.row(i) += row;
  }
}

ForwardResult forward(const ModelParams& params, const Batch& batch, Mode mode) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw std::invalid_argument("empty batch");
  if (mode == Mode::kTrain && n < 2) {
    throw std::invalid_argument("train-mode batch norm needs at least two rows");
  }
  ForwardResult out;
  out.mode = mode;
  out.layers.resize(params.layers.size());
  for (size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    auto& cache = out.layers[l];
    Matrix z;
    if (l == 0) {
      z = batch.affine(layer.weight, layer.bias);
    } else {
      cache.input = std::move(out.layers[l - 1].output);
      z = cache.input * layer.weight;
      z.rowwise() += layer.bias.transpose();
    }
    if (params.spec.batch_norm) {
      if (mode == Mode::kTrain) {
        cache.batch_mean = z.colwise().mean().transpose();
        z.rowwise() -= cache.batch_mean.transpose();
        cache.batch_var = z.array().square().colwise().mean().transpose();
      } else {
        cache.batch_mean = layer.running_mean;
        cache.batch_var = layer.running_var;
        z.rowwise() -= cache.batch_mean.transpose();
      }
      cache.inv_std = (cache.batch_var.array() + kBatchNormEpsilon).rsqrt().matrix();
      z.array().rowwise() *= cache.inv_std.transpose().array();
      cache.normalized = z;
      z.array().rowwise() *= layer.gamma.transpose().array();
      z.rowwise() += layer.beta.transpose();
    }
    cache.output = z.cwiseMax(0.0);
    cache.pre_activation = std::move(z);
  }
  const Matrix& last = out.layers.back().output;
  out.logits = last * params.head_weight;
  out.logits.rowwise() += params.head_bias.transpose();
  out.probabilities = out.logits.unaryExpr([](double x) { return sigmoid(x); });
  return out;
}

void update_running_stats(ModelParams& params, const ForwardResult& cache) {
  if (cache.mode != Mode::kTrain || !params.spec.batch_norm) return;
  for (size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    const auto& c = cache.layers[l];
    const double n = static_cast<double>(c.pre_activation.rows());
    layer.running_mean = kBatchNormMomentum * layer.running_mean +
                         (1.0 - kBatchNormMomentum) * c.batch_mean;
    layer.running_var = kBatchNormMomentum * layer.running_var +
                        (1.0 - kBatchNormMomentum) * (n / (n - 1.0)) * c.batch_var;
  }
}

double multitask_loss(const Matrix& probabilities, const Matrix& labels,
                      std::span<const double> head_weights) {
  if (probabilities.rows() != labels.rows() || probabilities.cols() != labels.cols()) {
    throw std::invalid_argument("probability and label shapes differ");
  }
  const auto weights = resolve_head_weights(head_weights, probabilities.cols());
  const double n = static_cast<double>(probabilities.rows());
  double loss = 0.0;
  for (Eigen::Index h = 0; h < probabilities.cols(); ++h) {
    double head = 0.0;
    for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
      const double p = std::clamp(probabilities(i, h), kLossClip, 1.0 - kLossClip);
      const double y = labels(i, h);
      head -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    loss += weights[static_cast<size_t>(h)] * head / n;
  }
  return loss;
}

Gradients backward(const ModelParams& params, const Batch& batch,
                   const ForwardResult& cache, const Matrix& labels,
                   std::span<const double> head_weights) {
  if (cache.mode != Mode::kTrain) {
    throw std::invalid_argument("backward needs a train-mode forward pass");
  }
  const Matrix& probs = cache.probabilities;
  if (labels.rows() != probs.rows() || labels.cols() != probs.cols()) {
    throw std::invalid_argument("label shape does not match network output");
  }
  const auto weights = resolve_head_weights(head_weights, probs.cols());
  const double n = static_cast<double>(probs.rows());

  // d loss / d logit = w_h (p - y) / N, zero where the loss clips p.
  Matrix d_logits(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    for (Eigen::Index h = 0; h < probs.cols(); ++h) {
      const double p = probs(i, h);
      const bool clipped = p < kLossClip || p > 1.0 - kLossClip;
      d_logits(i, h) = clipped ? 0.0 : weights[static_cast<size_t>(h)] * (p - labels(i, h)) / n;
    }
  }

  Gradients g = Gradients::zeros_like(params);
  const Matrix& last = cache.layers.back().output;
  g.head_weight.noalias() = last.transpose() * d_logits;
  g.head_bias = d_logits.colwise().sum().transpose();
  Matrix d_out = d_logits * params.head_weight.transpose();

  for (size_t l = params.layers.size(); l-- > 0;) {
    const auto& layer = params.layers[l];
    const auto& c = cache.layers[l];
    auto& gl = g.layers[l];
    Matrix d_z = (c.pre_activation.array() > 0.0).select(d_out.array(), 0.0).matrix();
    if (params.spec.batch_norm) {
      gl.gamma = (d_z.array() * c.normalized.array()).colwise().sum().transpose();
      gl.beta = d_z.colwise().sum().transpose();
      Matrix d_hat = d_z;
      d_hat.array().rowwise() *= layer.gamma.transpose().array();
      const Eigen::RowVectorXd sum_d = d_hat.colwise().sum();
      const Eigen::RowVectorXd sum_dx = (d_hat.array() * c.normalized.array()).colwise().sum();
      d_z = d_hat * n;
      d_z.rowwise() -= sum_d;
      d_z.array() -= c.normalized.array().rowwise() * sum_dx.array();
      d_z.array().rowwise() *= (c.inv_std.transpose().array() / n);
    }
    gl.bias = d_z.colwise().sum().transpose();
    if (l == 0) {
      batch.accumulate_weight_gradient(d_z, gl.weight);
    } else {
      gl.weight.noalias() = c.input.transpose() * d_z;
      d_out = d_z * layer.weight.transpose();
    }
  }
  return g;
}

AdamState AdamState::for_params(const ModelParams& params, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.first_moment = Gradients::zeros_like(params);
  s.second_moment = Gradients::zeros_like(params);
  return s;
}

void adam_update(std::span<double> theta, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, int64_t step,
                 double learning_rate, double beta1, double beta2, double epsilon) {
  if (step < 1) throw std::invalid_argument("Adam step counter must be >= 1");
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (size_t i = 0; i < theta.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    theta[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

void adam_step(AdamState& state, ModelParams& params, const Gradients& grads) {
  ++state.step;
  for_each_tensor(params, grads, state.first_moment, state.second_moment,
                  [&](std::span<double> theta, std::span<const double> g,
                      std::span<double> m, std::span<double> v) {
                    adam_update(theta, g, m, v, state.step, state.learning_rate,
                                state.beta1, state.beta2, state.epsilon);
                  });
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("batch size must be >= 2 for batch norm");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
}

Matrix label_matrix(const cohort::LabeledDataset& data, std::span<const size_t> rows) {
  const auto heads = static_cast<Eigen::Index>(1 + data.auxiliary.size());
  Matrix y(static_cast<Eigen::Index>(rows.size()), heads);
  for (size_t k = 0; k < rows.size(); ++k) {
    const auto r = rows[k];
    const auto i = static_cast<Eigen::Index>(k);
    y(i, 0) = data.target[r];
    for (size_t j = 0; j < data.auxiliary.size(); ++j) {
      y(i, static_cast<Eigen::Index>(j + 1)) = data.auxiliary[j][r];
    }
  }
  return y;
}

TrainResult train(const NetworkSpec& spec, const cohort::LabeledDataset& train_set,
                  const cohort::LabeledDataset& validation, const TrainConfig& config) {
  spec.validate();
  config.validate();
  if (train_set.size() < 2) throw std::invalid_argument("training split needs at least two rows");
  if (validation.size() == 0) throw std::invalid_argument("validation split is empty");
  if (static_cast<size_t>(spec.n_heads) != 1 + train_set.auxiliary.size()) {
    throw std::invalid_argument("n_heads must equal 1 + number of auxiliary tasks");
  }
  if (static_cast<int>(train_set.dimension) != spec.input_dim ||
      validation.dimension != train_set.dimension) {
    throw std::invalid_argument("train/validation feature dimensions do not match the network");
  }
  if (std::find(validation.target.begin(), validation.target.end(), uint8_t{1}) ==
      validation.target.end()) {
    throw std::invalid_argument("validation split has no positive targets");
  }

  TrainResult result;
  ModelParams params = init_params(spec, config.seed);
  AdamState adam = AdamState::for_params(params, config.learning_rate);
  Rng rng(splitmix64(config.seed ^ 0x5348554646ULL));

  const size_t n = train_set.size();
  const auto batch_size = static_cast<size_t>(config.batch_size);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  double best_auprc = -1.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<size_t>(order));
    double epoch_loss = 0.0;
    size_t start = 0;
    while (start < n) {
      size_t end = std::min(n, start + batch_size);
      // A trailing single row joins the previous batch.
      if (n - end < 2) end = n;
      const std::span<const size_t> rows(order.data() + start, end - start);
      const Batch batch = Batch::sparse(train_set.features, rows);
      const Matrix labels = label_matrix(train_set, rows);
      const ForwardResult cache = forward(params, batch, Mode::kTrain);
      const double loss = multitask_loss(cache.probabilities, labels, config.head_weights);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) +
                            ", batch starting at row " + std::to_string(start));
      }
      const Gradients grads = backward(params, batch, cache, labels, config.head_weights);
      update_running_stats(params, cache);
      adam_step(adam, params, grads);
      epoch_loss += loss * static_cast<double>(rows.size());
      start = end;
    }
    result.history.train_loss.push_back(epoch_loss / static_cast<double>(n));

    const auto scores = predict(params, validation.features);
    for (const double s : scores) {
      if (!std::isfinite(s)) {
        throw TrainingError("non-finite validation prediction at epoch " + std::to_string(epoch));
      }
    }
    const double val = metrics::auprc(scores, validation.target);
    result.history.validation_auprc.push_back(val);
    if (val > best_auprc) {
      best_auprc = val;
      result.history.selected_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

Matrix predict_heads(const ModelParams& params,
                     std::span<const cohort::FeatureVector> features) {
  check_dimension(params, features);
  Matrix out(static_cast<Eigen::Index>(features.size()), params.spec.n_heads);
  for (size_t start = 0; start < features.size(); start += kPredictChunk) {
    const size_t len = std::min(kPredictChunk, features.size() - start);
    const auto res = forward(params, Batch::sparse(features.subspan(start, len)), Mode::kEval);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)) =
        res.probabilities;
  }
  return out;
}

std::vector<double> predict(const ModelParams& params,
                            std::span<const cohort::FeatureVector> features) {
  const Matrix heads = predict_heads(params, features);
  std::vector<double> out(static_cast<size_t>(heads.rows()));
  for (Eigen::Index i = 0; i < heads.rows(); ++i) out[static_cast<size_t>(i)] = heads(i, 0);
  return out;
}

void save_checkpoint(const ModelParams& params, std::ostream& out) {
  const auto& s = params.spec;
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "input_dim " << s.input_dim << '\n';
  out << "hidden " << s.hidden_sizes.size();
  for (const int w : s.hidden_sizes) out << ' ' << w;
  out << '\n';
  out << "heads " << s.n_heads << '\n';
  out << "batch_norm " << (s.batch_norm ? 1 : 0) << '\n';
  out << "seed " << params.seed << '\n';
  for (size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    write_tensor(out, p + "weight", layer.weight.data(), layer.weight.rows(), layer.weight.cols());
    write_tensor(out, p + "bias", layer.bias.data(), 1, layer.bias.size());
    write_tensor(out, p + "gamma", layer.gamma.data(), 1, layer.gamma.size());
    write_tensor(out, p + "beta", layer.beta.data(), 1, layer.beta.size());
    write_tensor(out, p + "running_mean", layer.running_mean.data(), 1, layer.running_mean.size());
    write_tensor(out, p + "running_var", layer.running_var.data(), 1, layer.running_var.size());
  }
  write_tensor(out, "head.weight", params.head_weight.data(), params.head_weight.rows(),
               params.head_weight.cols());
  write_tensor(out, "head.bias", params.head_bias.data(), 1, params.head_bias.size());
}

ModelParams load_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) {
    throw std::runtime_error("not a phenomtl checkpoint");
  }
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  auto expect_key = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) throw std::runtime_error(std::string("checkpoint: expected ") + key);
  };
  NetworkSpec spec;
  expect_key("input_dim");
  in >> spec.input_dim;
  expect_key("hidden");
  size_t layers = 0;
  in >> layers;
  if (layers > 2) throw std::runtime_error("checkpoint: too many hidden layers");
  spec.hidden_sizes.resize(layers);
  for (auto& w : spec.hidden_sizes) in >> w;
  expect_key("heads");
  in >> spec.n_heads;
  expect_key("batch_norm");
  int bn = 0;
  in >> bn;
  spec.batch_norm = bn != 0;
  expect_key("seed");
  uint64_t seed = 0;
  in >> seed;
  if (!in) throw std::runtime_error("checkpoint: malformed header");

  ModelParams p = init_params(spec, seed);
  for (size_t l = 0; l < p.layers.size(); ++l) {
    auto& layer = p.layers[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    read_tensor(in, pre + "weight", layer.weight);
    Eigen::Map<Eigen::RowVectorXd> bias(layer.bias.data(), layer.bias.size());
    Eigen::Map<Eigen::RowVectorXd> gamma(layer.gamma.data(), layer.gamma.size());
    Eigen::Map<Eigen::RowVectorXd> beta(layer.beta.data(), layer.beta.size());
    Eigen::Map<Eigen::RowVectorXd> mean(layer.running_mean.data(), layer.running_mean.size());
    Eigen::Map<Eigen::RowVectorXd> var(layer.running_var.data(), layer.running_var.size());
    read_tensor(in, pre + "bias", bias);
    read_tensor(in, pre + "gamma", gamma);
    read_tensor(in, pre + "beta", beta);
    read_tensor(in, pre + "running_mean", mean);
    read_tensor(in, pre + "running_var", var);
  }
  read_tensor(in, "head.weight", p.head_weight);
  Eigen::Map<Eigen::RowVectorXd> head_bias(p.head_bias.data(), p.head_bias.size());
  read_tensor(in, "head.bias", head_bias);
  return p;
}

}  // namespace phenomtl::nnet

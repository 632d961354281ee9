// Copyright 2026 The eqpnet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EQPNET_NEURALNET_HPP
#define EQPNET_NEURALNET_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqpnet/eqp.hpp"
#include "eqpnet/measurement.hpp"
#include "eqpnet/qcore.hpp"
#include "eqpnet/rng.hpp"

namespace eqpnet {

enum class Activation { silu, softplus };
std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct ModelConfig {
  int input_dim = 72;
  int output_dim = 36;
  int width = 512;
  int n_blocks = 4;
  Activation activation = Activation::silu;
  std::uint64_t init_seed = 1;

  // Defaults for the universal frame of N qubits.
  static ModelConfig for_qubits(int n_qubits);
  void validate() const;
};

// h_0 = act(W_in x + b_in)
// h_k = h_{k-1} + W2_k act(W1_k h_{k-1} + b1_k) + b2_k
// y   = W_out h_K + b_out
//
// All parameters live in one flat vector; the layer matrices are views.
class ResidualModel {
 public:
  explicit ResidualModel(const ModelConfig& cfg);

  const ModelConfig& config() const noexcept { return cfg_; }
  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(params_.size()); }
  RVector& parameters() noexcept { return params_; }
  const RVector& parameters() const noexcept { return params_; }

  // Fan-in scaled normal weights; second layer of every residual branch
  // zeroed so each block starts as the identity.
  void initialize(std::uint64_t seed);
  void zero_output_head();

  RVector forward(std::span<const double> x) const;
  // Column-per-sample batch.
  RMatrix forward_batch(const RMatrix& x) const;

  struct Layout {
    Eigen::Index w_in, b_in, w_out, b_out;
    struct Block { Eigen::Index w1, b1, w2, b2; };
    std::vector<Block> blocks;
    Eigen::Index total;
  };
  const Layout& layout() const noexcept { return layout_; }

  void save(std::ostream& os) const;
  static ResidualModel load(std::istream& is);
  void save(const std::string& path) const;
  static ResidualModel load(const std::string& path);

 private:
  ModelConfig cfg_;
  Layout layout_;
  RVector params_;
};

enum class LossKind { mse, sign_weighted };
std::string_view to_string(LossKind k);
LossKind parse_loss_kind(std::string_view name);

struct LossSpec {
  LossKind kind = LossKind::mse;
  double w_neg = 2.0;
};

// Mean over entries of (pred - target)^2, weighted by w_neg where target < 0
// for sign_weighted.
double loss(std::span<const double> pred, std::span<const double> target, const LossSpec& spec = {});
// Batch loss: mean of the per-sample losses over the columns.
double batch_loss(const RMatrix& pred, const RMatrix& target, const LossSpec& spec = {});

// Gradient of batch_loss(forward_batch(x), target) with respect to the flat
// parameter vector. The value of the loss is returned through `loss_out`.
RVector backward_batch(const ResidualModel& model, const RMatrix& x, const RMatrix& target,
                       const LossSpec& spec = {}, double* loss_out = nullptr);
RVector backward(const ResidualModel& model, std::span<const double> x,
                 std::span<const double> target, const LossSpec& spec = {});

// Columns are samples.
struct TrainingSet {
  RMatrix inputs;
  RMatrix targets;
  Eigen::Index size() const noexcept { return inputs.cols(); }
};

struct TrainConfig {
  int batch_size = 256;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double lr_decay = 1.0;  // multiplicative per epoch
  int epochs = 200;
  int patience = 20;
  LossSpec loss;
  double train_fraction = 0.8;  // 4:1 train:validation
  std::uint64_t shuffle_seed = 7;
  bool verbose = false;
};

struct EpochStats {
  int epoch;
  double train_loss;
  double val_rmse;
};

struct TrainResult {
  ResidualModel model;
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_rmse = 0.0;
};

// Splits `data` 4:1 (train_fraction) in index order and trains.
TrainResult train(const TrainingSet& data, const ModelConfig& model_cfg, const TrainConfig& cfg);
TrainResult train(const TrainingSet& train_set, const TrainingSet& val_set,
                  const ModelConfig& model_cfg, const TrainConfig& cfg,
                  std::ostream* log = nullptr);

// RMSE over all entries of a batch prediction.
double batch_rmse(const RMatrix& pred, const RMatrix& target);

struct EqpPrediction {
  RVector eqp;
  double negativity = 0.0;
  Reconstruction reconstruction;
  double purity = 0.0;
  std::optional<double> fidelity;  // against the reference, when given
};

// encode_input -> forward -> reconstruct -> purity / fidelity.
EqpPrediction predict_eqp(const ResidualModel& model, const MeasurementRecord& record,
                          const ProjectorFrame& frame,
                          const DensityMatrix* reference = nullptr);

}  // namespace eqpnet

#endif  // EQPNET_NEURALNET_HPP

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

#include "eqpnet/neuralnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include <json.hpp>

#include "eqpnet/error.hpp"

namespace eqpnet {
namespace {

constexpr const char* kModelFormat = "eqpnet-model";
constexpr int kModelVersion = 1;

using MatMap = Eigen::Map<RMatrix>;
using ConstMatMap = Eigen::Map<const RMatrix>;
using ConstVecMap = Eigen::Map<const RVector>;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double act(Activation a, double x) {
  if (a == Activation::silu) return x * sigmoid(x);
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double act_grad(Activation a, double x) {
  const double s = sigmoid(x);
  if (a == Activation::silu) return s * (1.0 + x * (1.0 - s));
  return s;
}

RMatrix apply_act(Activation a, const RMatrix& z) {
  return z.unaryExpr([a](double v) { return act(a, v); });
}

RMatrix apply_act_grad(Activation a, const RMatrix& z) {
  return z.unaryExpr([a](double v) { return act_grad(a, v); });
}

struct Views {
  ConstMatMap w_in, w_out;
  ConstVecMap b_in, b_out;
};

ConstMatMap mat(const RVector& p, Eigen::Index off, Eigen::Index rows, Eigen::Index cols) {
  return ConstMatMap(p.data() + off, rows, cols);
}

ConstVecMap vec(const RVector& p, Eigen::Index off, Eigen::Index n) {
  return ConstVecMap(p.data() + off, n);
}

RMatrix weights(const RMatrix& loss_like_target, const LossSpec& spec) {
  if (spec.kind == LossKind::mse) return RMatrix::Ones(loss_like_target.rows(), loss_like_target.cols());
  return loss_like_target.unaryExpr([&](double t) { return t < 0.0 ? spec.w_neg : 1.0; });
}

// Forward pass retaining the activations needed by the backward pass.
struct Trace {
  RMatrix a0;                 // pre-activation of the input projection
  std::vector<RMatrix> h;     // h_0 .. h_K
  std::vector<RMatrix> a1;    // branch pre-activations
  std::vector<RMatrix> s1;    // branch activations
  RMatrix y;
};

Trace run(const ResidualModel& m, const RMatrix& x) {
  const ModelConfig& c = m.config();
  const auto& L = m.layout();
  const RVector& p = m.parameters();
  if (x.rows() != c.input_dim) {
    throw InvalidInput("forward: input length " + std::to_string(x.rows()) +
                       " does not match model input_dim " + std::to_string(c.input_dim));
  }
  Trace t;
  t.a0 = (mat(p, L.w_in, c.width, c.input_dim) * x).colwise() + vec(p, L.b_in, c.width);
  t.h.push_back(apply_act(c.activation, t.a0));
  for (const auto& b : L.blocks) {
    RMatrix a1 = (mat(p, b.w1, c.width, c.width) * t.h.back()).colwise() + vec(p, b.b1, c.width);
    RMatrix s1 = apply_act(c.activation, a1);
    RMatrix next = t.h.back() + mat(p, b.w2, c.width, c.width) * s1;
    next.colwise() += vec(p, b.b2, c.width);
    t.a1.push_back(std::move(a1));
    t.s1.push_back(std::move(s1));
    t.h.push_back(std::move(next));
  }
  t.y = (mat(p, L.w_out, c.output_dim, c.width) * t.h.back()).colwise() +
        vec(p, L.b_out, c.output_dim);
  return t;
}

}  // namespace

std::string_view to_string(Activation a) { return a == Activation::silu ? "silu" : "softplus"; }

Activation parse_activation(std::string_view name) {
  if (name == "silu") return Activation::silu;
  if (name == "softplus") return Activation::softplus;
  throw InvalidInput("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(LossKind k) { return k == LossKind::mse ? "mse" : "sign_weighted"; }

LossKind parse_loss_kind(std::string_view name) {
  if (name == "mse") return LossKind::mse;
  if (name == "sign_weighted") return LossKind::sign_weighted;
  throw InvalidInput("unknown loss '" + std::string(name) + "'");
}

ModelConfig ModelConfig::for_qubits(int n_qubits) {
  ModelConfig c;
  const auto frame_size = static_cast<int>(universal_frame(n_qubits).size());
  c.input_dim = 2 * frame_size;
  c.output_dim = frame_size;
  c.width = n_qubits >= 3 ? 1024 : 512;
  c.n_blocks = n_qubits >= 3 ? 6 : 4;
  return c;
}

void ModelConfig::validate() const {
  if (input_dim < 1 || output_dim < 1 || width < 1 || n_blocks < 0) {
    throw InvalidInput("model config: dimensions must be positive");
  }
}

ResidualModel::ResidualModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const Eigen::Index w = cfg_.width, in = cfg_.input_dim, out = cfg_.output_dim;
  Eigen::Index off = 0;
  layout_.w_in = off; off += w * in;
  layout_.b_in = off; off += w;
  for (int k = 0; k < cfg_.n_blocks; ++k) {
    Layout::Block b{};
    b.w1 = off; off += w * w;
    b.b1 = off; off += w;
    b.w2 = off; off += w * w;
    b.b2 = off; off += w;
    layout_.blocks.push_back(b);
  }
  layout_.w_out = off; off += out * w;
  layout_.b_out = off; off += out;
  layout_.total = off;
  params_ = RVector::Zero(off);
  initialize(cfg_.init_seed);
}

void ResidualModel::initialize(std::uint64_t seed) {
  params_.setZero();
  // One substream per layer so the input and output layers do not depend on
  // the depth: a deeper model starts as the same function.
  const auto fill = [&](Eigen::Index off, Eigen::Index count, double scale, std::uint64_t stream) {
    Rng rng = Rng::substream(seed, stream);
    for (Eigen::Index i = 0; i < count; ++i) params_[off + i] = scale * rng.normal();
  };
  const Eigen::Index w = cfg_.width;
  const auto he = [](Eigen::Index fan_in) { return std::sqrt(2.0 / static_cast<double>(fan_in)); };
  fill(layout_.w_in, w * cfg_.input_dim, he(cfg_.input_dim), 0);
  // Output head uses unit-gain fan-in scaling (no rectifier follows it).
  fill(layout_.w_out, cfg_.output_dim * w, std::sqrt(1.0 / static_cast<double>(w)), 1);
  for (std::size_t k = 0; k < layout_.blocks.size(); ++k) fill(layout_.blocks[k].w1, w * w, he(w), 2 + k);
}

void ResidualModel::zero_output_head() {
  params_.segment(layout_.w_out, layout_.total - layout_.w_out).setZero();
}

RMatrix ResidualModel::forward_batch(const RMatrix& x) const { return run(*this, x).y; }

RVector ResidualModel::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != cfg_.input_dim) {
    throw InvalidInput("forward: input length " + std::to_string(x.size()) +
                       " does not match model input_dim " + std::to_string(cfg_.input_dim));
  }
  const RMatrix col = ConstVecMap(x.data(), static_cast<Eigen::Index>(x.size()));
  return forward_batch(col).col(0);
}

void ResidualModel::save(std::ostream& os) const {
  static_assert(std::endian::native == std::endian::little, "model files are little-endian");
  nlohmann::json header = {
      {"format", kModelFormat},
      {"version", kModelVersion},
      {"input_dim", cfg_.input_dim},
      {"output_dim", cfg_.output_dim},
      {"width", cfg_.width},
      {"n_blocks", cfg_.n_blocks},
      {"activation", std::string(to_string(cfg_.activation))},
      {"init_seed", cfg_.init_seed},
      {"parameter_count", params_.size()},
  };
  os << header.dump() << '\n';
  os.write(reinterpret_cast<const char*>(params_.data()),
           static_cast<std::streamsize>(params_.size() * sizeof(double)));
  if (!os) throw IoError("failed to write model");
}

ResidualModel ResidualModel::load(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("model file: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("model file: bad header: ") + e.what());
  }
  if (header.value("format", "") != kModelFormat || header.value("version", 0) != kModelVersion) {
    throw IoError("model file: unsupported format or version");
  }
  ModelConfig cfg;
  cfg.input_dim = header.at("input_dim").get<int>();
  cfg.output_dim = header.at("output_dim").get<int>();
  cfg.width = header.at("width").get<int>();
  cfg.n_blocks = header.at("n_blocks").get<int>();
  cfg.activation = parse_activation(header.at("activation").get<std::string>());
  cfg.init_seed = header.at("init_seed").get<std::uint64_t>();
  ResidualModel m(cfg);
  if (header.at("parameter_count").get<Eigen::Index>() != m.params_.size()) {
    throw IoError("model file: parameter count does not match the configuration");
  }
  is.read(reinterpret_cast<char*>(m.params_.data()),
          static_cast<std::streamsize>(m.params_.size() * sizeof(double)));
  if (!is) throw IoError("model file: truncated parameter block");
  return m;
}

void ResidualModel::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  save(os);
}

ResidualModel ResidualModel::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return load(is);
}

// ---------------------------------------------------------------------------

double loss(std::span<const double> pred, std::span<const double> target, const LossSpec& spec) {
  if (pred.size() != target.size() || pred.empty()) throw InvalidInput("loss: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    const double w = spec.kind == LossKind::sign_weighted && target[i] < 0.0 ? spec.w_neg : 1.0;
    s += w * e * e;
  }
  return s / static_cast<double>(pred.size());
}

double batch_loss(const RMatrix& pred, const RMatrix& target, const LossSpec& spec) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.size() == 0) {
    throw InvalidInput("batch_loss: shape mismatch");
  }
  const RMatrix w = weights(target, spec);
  return (w.array() * (pred - target).array().square()).sum() / static_cast<double>(pred.size());
}

double batch_rmse(const RMatrix& pred, const RMatrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.size() == 0) {
    throw InvalidInput("batch_rmse: shape mismatch");
  }
  return std::sqrt((pred - target).squaredNorm() / static_cast<double>(pred.size()));
}

RVector backward_batch(const ResidualModel& model, const RMatrix& x, const RMatrix& target,
                       const LossSpec& spec, double* loss_out) {
  const ModelConfig& c = model.config();
  const auto& L = model.layout();
  const RVector& p = model.parameters();
  if (target.rows() != c.output_dim || target.cols() != x.cols()) {
    throw InvalidInput("backward: target shape does not match the model output");
  }
  const Trace t = run(model, x);
  const RMatrix w = weights(target, spec);
  const double denom = static_cast<double>(target.size());
  const RMatrix diff = t.y - target;
  if (loss_out) *loss_out = (w.array() * diff.array().square()).sum() / denom;

  RVector grad = RVector::Zero(p.size());
  const auto gmat = [&](Eigen::Index off, Eigen::Index rows, Eigen::Index cols) {
    return MatMap(grad.data() + off, rows, cols);
  };

  RMatrix dy = (2.0 / denom) * (w.array() * diff.array()).matrix();
  gmat(L.w_out, c.output_dim, c.width).noalias() = dy * t.h.back().transpose();
  grad.segment(L.b_out, c.output_dim) = dy.rowwise().sum();
  RMatrix dh = mat(p, L.w_out, c.output_dim, c.width).transpose() * dy;

  for (int k = c.n_blocks - 1; k >= 0; --k) {
    const auto& b = L.blocks[static_cast<std::size_t>(k)];
    const auto uk = static_cast<std::size_t>(k);
    gmat(b.w2, c.width, c.width).noalias() = dh * t.s1[uk].transpose();
    grad.segment(b.b2, c.width) = dh.rowwise().sum();
    const RMatrix ds = mat(p, b.w2, c.width, c.width).transpose() * dh;
    const RMatrix da = (ds.array() * apply_act_grad(c.activation, t.a1[uk]).array()).matrix();
    gmat(b.w1, c.width, c.width).noalias() = da * t.h[uk].transpose();
    grad.segment(b.b1, c.width) = da.rowwise().sum();
    dh.noalias() += mat(p, b.w1, c.width, c.width).transpose() * da;
  }

  const RMatrix da0 = (dh.array() * apply_act_grad(c.activation, t.a0).array()).matrix();
  gmat(L.w_in, c.width, c.input_dim).noalias() = da0 * x.transpose();
  grad.segment(L.b_in, c.width) = da0.rowwise().sum();
  return grad;
}

RVector backward(const ResidualModel& model, std::span<const double> x,
                 std::span<const double> target, const LossSpec& spec) {
  const RMatrix xc = ConstVecMap(x.data(), static_cast<Eigen::Index>(x.size()));
  const RMatrix tc = ConstVecMap(target.data(), static_cast<Eigen::Index>(target.size()));
  return backward_batch(model, xc, tc, spec);
}

// ---------------------------------------------------------------------------

namespace {

RMatrix gather_columns(const RMatrix& m, std::span<const Eigen::Index> idx) {
  RMatrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
  return out;
}

double evaluate_rmse(const ResidualModel& model, const TrainingSet& set) {
  constexpr Eigen::Index kChunk = 1024;
  double sq = 0.0;
  for (Eigen::Index start = 0; start < set.size(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, set.size() - start);
    const RMatrix pred = model.forward_batch(set.inputs.middleCols(start, n));
    sq += (pred - set.targets.middleCols(start, n)).squaredNorm();
  }
  return std::sqrt(sq / static_cast<double>(set.targets.size()));
}

void check_set(const TrainingSet& s, const ModelConfig& mc, const char* what) {
  if (s.size() == 0) throw InvalidInput(std::string(what) + " set is empty");
  if (s.inputs.rows() != mc.input_dim || s.targets.rows() != mc.output_dim ||
      s.targets.cols() != s.inputs.cols()) {
    throw InvalidInput(std::string(what) + " set shape does not match the model");
  }
}

}  // namespace

TrainResult train(const TrainingSet& data, const ModelConfig& model_cfg, const TrainConfig& cfg) {
  if (data.size() == 0) throw InvalidInput("train: empty dataset");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw InvalidInput("train: train_fraction must lie in (0, 1)");
  }
  auto n_train = static_cast<Eigen::Index>(std::llround(cfg.train_fraction * static_cast<double>(data.size())));
  n_train = std::clamp<Eigen::Index>(n_train, 1, std::max<Eigen::Index>(1, data.size() - 1));
  TrainingSet tr{data.inputs.leftCols(n_train), data.targets.leftCols(n_train)};
  TrainingSet va = data.size() > n_train
                       ? TrainingSet{data.inputs.rightCols(data.size() - n_train),
                                     data.targets.rightCols(data.size() - n_train)}
                       : tr;
  return train(tr, va, model_cfg, cfg);
}

TrainResult train(const TrainingSet& train_set, const TrainingSet& val_set,
                  const ModelConfig& model_cfg, const TrainConfig& cfg, std::ostream* log) {
  check_set(train_set, model_cfg, "training");
  check_set(val_set, model_cfg, "validation");
  if (cfg.batch_size < 1 || cfg.epochs < 1 || !(cfg.learning_rate > 0.0)) {
    throw InvalidInput("train: batch size, epochs and learning rate must be positive");
  }

  TrainResult result{ResidualModel(model_cfg), {}, -1, 0.0};
  ResidualModel& model = result.model;
  RVector best = model.parameters();
  result.best_val_rmse = evaluate_rmse(model, val_set);

  const Eigen::Index np = model.parameters().size();
  RVector m1 = RVector::Zero(np);
  RVector m2 = RVector::Zero(np);
  long long step = 0;
  double lr = cfg.learning_rate;
  int since_best = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_set.size()));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng = Rng::substream(cfg.shuffle_seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
    }

    double loss_sum = 0.0;
    Eigen::Index seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t n = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
      const std::span<const Eigen::Index> idx(order.data() + start, n);
      const RMatrix xb = gather_columns(train_set.inputs, idx);
      const RMatrix yb = gather_columns(train_set.targets, idx);
      double batch = 0.0;
      const RVector g = backward_batch(model, xb, yb, cfg.loss, &batch);
      if (!std::isfinite(batch) || !g.allFinite()) {
        throw NumericalFailure("train: loss diverged at epoch " + std::to_string(epoch) +
                               " step " + std::to_string(step) + " (loss " + std::to_string(batch) + ")");
      }
      loss_sum += batch * static_cast<double>(n);
      seen += static_cast<Eigen::Index>(n);

      ++step;
      m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * g;
      m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      model.parameters().array() -=
          lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + cfg.adam_eps);
    }

    const double val = evaluate_rmse(model, val_set);
    result.history.push_back({epoch, loss_sum / static_cast<double>(seen), val});
    if (log) {
      *log << "epoch " << epoch << " train_loss " << result.history.back().train_loss
           << " val_rmse " << val << '\n';
    }
    if (val < result.best_val_rmse || result.best_epoch < 0) {
      result.best_val_rmse = val;
      result.best_epoch = epoch;
      best = model.parameters();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
    lr *= cfg.lr_decay;
  }
  model.parameters() = best;
  return result;
}

EqpPrediction predict_eqp(const ResidualModel& model, const MeasurementRecord& record,
                          const ProjectorFrame& frame, const DensityMatrix* reference) {
  if (model.config().input_dim != static_cast<int>(2 * frame.size()) ||
      model.config().output_dim != static_cast<int>(frame.size())) {
    throw InvalidInput("predict_eqp: model does not match the measurement frame");
  }
  const std::vector<double> x = encode_input(record, frame);
  RVector eqp = model.forward(x);
  Reconstruction rec = reconstruct(std::span<const double>(eqp.data(), static_cast<std::size_t>(eqp.size())), frame);
  EqpPrediction out{eqp, negativity(eqp), rec, purity(rec.rho), std::nullopt};
  if (reference) out.fidelity = fidelity(rec.rho, *reference);
  return out;
}

}  // namespace eqpnet

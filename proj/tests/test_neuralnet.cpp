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

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "eqpnet/error.hpp"
#include "eqpnet/neuralnet.hpp"
#include "support.hpp"

namespace eqpnet {
namespace {

ModelConfig small_config(int width, int blocks, Activation act = Activation::silu) {
  ModelConfig c;
  c.input_dim = 72;
  c.output_dim = 36;
  c.width = width;
  c.n_blocks = blocks;
  c.activation = act;
  c.init_seed = 11;
  return c;
}

RMatrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  RMatrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = scale * rng.normal();
  return m;
}

// Full-frame exact inputs and canonical targets for random 2-qubit states.
TrainingSet exact_set(int count, std::uint64_t seed) {
  Rng rng(seed);
  const ProjectorFrame& f = canonical_map(2).frame();
  std::vector<std::size_t> all(f.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  TrainingSet s{RMatrix(72, count), RMatrix(36, count)};
  for (int k = 0; k < count; ++k) {
    const DensityMatrix rho = bures_state(2, rng);
    const std::vector<double> x = encode_input(exact_record(rho, f, all), f);
    s.inputs.col(k) = Eigen::Map<const RVector>(x.data(), 72);
    s.targets.col(k) = canonical_qp(rho, f);
  }
  return s;
}

double training_mse(const ResidualModel& m, const TrainingSet& s) {
  return batch_loss(m.forward_batch(s.inputs), s.targets);
}

TEST(Forward, ZeroBranchesAndHeadGiveZero) {
  ResidualModel m(small_config(16, 2));
  m.zero_output_head();
  Rng rng(1);
  const RMatrix x = random_matrix(72, 5, rng);
  EXPECT_EQ(m.forward_batch(x).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, DeterministicAndBatchConsistent) {
  const ResidualModel m(small_config(32, 2));
  Rng rng(2);
  const RMatrix x = random_matrix(72, 4, rng);
  const RMatrix a = m.forward_batch(x);
  const RMatrix b = m.forward_batch(x);
  EXPECT_TRUE((a.array() == b.array()).all());
  const RVector c = x.col(2);
  const RVector y = m.forward(std::span<const double>(c.data(), 72));
  EXPECT_LE((y - a.col(2)).cwiseAbs().maxCoeff(), 1e-13);
  const std::vector<double> bad(71, 0.0);
  EXPECT_THROW(m.forward(bad), InvalidInput);
}

TEST(Forward, InitialFunctionIsInvariantToDepth) {
  Rng rng(3);
  const RMatrix x = random_matrix(72, 6, rng);
  const RMatrix base = ResidualModel(small_config(32, 1)).forward_batch(x);
  for (int blocks : {0, 2, 4, 8}) {
    const RMatrix y = ResidualModel(small_config(32, blocks)).forward_batch(x);
    EXPECT_LE((y - base).cwiseAbs().maxCoeff(), 1e-14) << blocks;
  }
}

// Independent forward pass written out layer by layer.
RVector oracle_forward(const ResidualModel& m, const RVector& x) {
  const auto& c = m.config();
  const auto& l = m.layout();
  const RVector& p = m.parameters();
  const auto mat = [&](Eigen::Index off, int rows, int cols) {
    RMatrix w(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) w(i, j) = p[off + static_cast<Eigen::Index>(j) * rows + i];
    return w;
  };
  const auto act = [&](RVector v) {
    for (auto& e : v) e = c.activation == Activation::silu ? e / (1.0 + std::exp(-e)) : std::log1p(std::exp(e));
    return v;
  };
  RVector h = act(mat(l.w_in, c.width, c.input_dim) * x + p.segment(l.b_in, c.width));
  for (const auto& b : l.blocks) {
    const RVector a = act(mat(b.w1, c.width, c.width) * h + p.segment(b.b1, c.width));
    h += mat(b.w2, c.width, c.width) * a + p.segment(b.b2, c.width);
  }
  return mat(l.w_out, c.output_dim, c.width) * h + p.segment(l.b_out, c.output_dim);
}

TEST(Forward, MatchesLayerByLayerOracle) {
  for (Activation act : {Activation::silu, Activation::softplus}) {
    ResidualModel m(small_config(8, 2, act));
    Rng rng(4);
    for (auto& v : m.parameters()) v = 0.3 * rng.normal();
    const RVector x = random_matrix(72, 1, rng).col(0);
    const RVector y = m.forward(std::span<const double>(x.data(), 72));
    EXPECT_LE((y - oracle_forward(m, x)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Loss, Examples) {
  const std::vector<double> t{0.1, -0.2, 0.3, 0.0};
  EXPECT_EQ(loss(t, t), 0.0);
  std::vector<double> p = t;
  for (auto& v : p) v += 1.0;
  EXPECT_NEAR(loss(p, t), 1.0, 1e-15);
  std::vector<double> q = t;
  q[1] += 0.5;
  const LossSpec sw{LossKind::sign_weighted, 2.0};
  EXPECT_NEAR(loss(q, t, sw), 2.0 * 0.25 / 4.0, 1e-15);
  EXPECT_NEAR(loss(q, t), 0.25 / 4.0, 1e-15);
  EXPECT_THROW(loss(std::vector<double>{1.0}, t), InvalidInput);
  EXPECT_EQ(parse_loss_kind("sign_weighted"), LossKind::sign_weighted);
  EXPECT_EQ(to_string(LossKind::mse), "mse");
}

TEST(Loss, BatchIsMeanOfPerSample) {
  Rng rng(5);
  const RMatrix a = random_matrix(36, 7, rng), b = random_matrix(36, 7, rng);
  const LossSpec sw{LossKind::sign_weighted, 3.0};
  double mean = 0.0;
  for (Eigen::Index j = 0; j < 7; ++j) {
    const RVector pa = a.col(j), pb = b.col(j);
    mean += loss(std::span<const double>(pa.data(), 36), std::span<const double>(pb.data(), 36), sw) / 7.0;
  }
  EXPECT_NEAR(batch_loss(a, b, sw), mean, 1e-14);
  EXPECT_NEAR(batch_rmse(a, b), std::sqrt(batch_loss(a, b)), 1e-14);
}

// Trained-regime parameters: library init plus filled residual branches and biases.
void randomize_trained(ResidualModel& m, Rng& rng) {
  const auto& l = m.layout();
  const Eigen::Index w = m.config().width;
  const double sw = std::sqrt(1.0 / static_cast<double>(w));
  RVector& p = m.parameters();
  for (const auto& b : l.blocks) {
    for (Eigen::Index j = 0; j < w * w; ++j) p[b.w2 + j] = sw * rng.normal();
    for (Eigen::Index j = 0; j < w; ++j) {
      p[b.b1 + j] = 0.1 * rng.normal();
      p[b.b2 + j] = 0.1 * rng.normal();
    }
  }
  for (Eigen::Index j = 0; j < w; ++j) p[l.b_in + j] = 0.1 * rng.normal();
  for (auto j = l.b_out; j < static_cast<Eigen::Index>(m.parameter_count()); ++j) p[j] = 0.1 * rng.normal();
}

// A central difference at step h cannot resolve gradients below its own
// rounding noise, about eps * L / h, so the ratio floors there.
double fd_floor(double loss, double h) {
  return std::max(1e-6, 1e5 * std::numeric_limits<double>::epsilon() * std::max(loss, 1.0) / h);
}

// Central differences on random coordinates of a randomized model.
double gradient_check(int width, int blocks, Activation act, LossSpec spec, std::uint64_t seed) {
  ModelConfig cfg = small_config(width, blocks, act);
  ResidualModel m(cfg);
  Rng rng(seed);
  m.initialize(seed);
  randomize_trained(m, rng);
  const RMatrix x = random_matrix(72, 3, rng, 0.5);
  const RMatrix t = random_matrix(36, 3, rng, 0.5);
  double loss = 0.0;
  const RVector g = backward_batch(m, x, t, spec, &loss);
  const double h = 1e-5;
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto i = static_cast<Eigen::Index>(rng.below(m.parameter_count()));
    const double keep = m.parameters()[i];
    m.parameters()[i] = keep + h;
    const double up = batch_loss(m.forward_batch(x), t, spec);
    m.parameters()[i] = keep - h;
    const double down = batch_loss(m.forward_batch(x), t, spec);
    m.parameters()[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(g[i]), fd_floor(loss, h)});
    worst = std::max(worst, std::abs(fd - g[i]) / scale);
  }
  return worst;
}

TEST(Backward, MatchesCentralDifferences) {
  std::uint64_t seed = 100;
  for (int blocks : {1, 2, 4})
    for (int width : {16, 64})
      for (Activation act : {Activation::silu, Activation::softplus})
        for (LossKind kind : {LossKind::mse, LossKind::sign_weighted}) {
          const double err = gradient_check(width, blocks, act, LossSpec{kind, 2.0}, ++seed);
          EXPECT_LE(err, 1e-5) << blocks << " blocks, width " << width << ", " << to_string(act) << ", "
                               << to_string(kind);
        }
}

TEST(Backward, ZeroAtZeroLossAndLinearInError) {
  ResidualModel m(small_config(16, 2));
  Rng rng(6);
  for (auto& v : m.parameters()) v = 0.2 * rng.normal();
  const RMatrix x = random_matrix(72, 4, rng);
  const RMatrix y = m.forward_batch(x);
  double l = -1.0;
  EXPECT_LE(backward_batch(m, x, y, {}, &l).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(l, 0.0);
  const RMatrix e = random_matrix(36, 4, rng, 0.1);
  const RVector g1 = backward_batch(m, x, y - e);
  const RVector g2 = backward_batch(m, x, y - 2.0 * e);
  EXPECT_LE((g2 - 2.0 * g1).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, g1.cwiseAbs().maxCoeff()));
  const RVector xs = x.col(0), ts = (y - e).col(0);
  const RVector single = backward(m, std::span<const double>(xs.data(), 72), std::span<const double>(ts.data(), 36));
  EXPECT_LE((single - backward_batch(m, x.leftCols(1), (y - e).leftCols(1))).cwiseAbs().maxCoeff(), 1e-15);
}

TrainConfig fit_config(int epochs, int batch) {
  TrainConfig c;
  c.epochs = epochs;
  c.patience = epochs;
  c.batch_size = batch;
  return c;
}

TEST(Train, OverfitsTenSamples) {
  const TrainingSet s = exact_set(10, 7);
  const TrainResult r = train(s, s, small_config(64, 2), fit_config(2000, 10));
  EXPECT_LE(training_mse(r.model, s), 1e-4);
  EXPECT_EQ(static_cast<int>(r.history.size()), 2000);
}

TEST(Train, LearnsMaximallyMixedState) {
  TrainingSet s = exact_set(20, 8);
  const ProjectorFrame& f = canonical_map(2).frame();
  std::vector<std::size_t> all(36);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const DensityMatrix mixed = DensityMatrix::maximally_mixed(2);
  const MeasurementRecord rec = exact_record(mixed, f, all);
  const std::vector<double> x = encode_input(rec, f);
  s.inputs.col(0) = Eigen::Map<const RVector>(x.data(), 72);
  s.targets.col(0) = canonical_qp(mixed, f);
  const TrainResult r = train(s, s, small_config(64, 2), fit_config(800, 20));
  const EqpPrediction p = predict_eqp(r.model, rec, f, &mixed);
  EXPECT_EQ(p.eqp.size(), 36);
  const RVector d = p.eqp - canonical_qp(mixed, f);
  EXPECT_LE(std::sqrt(d.squaredNorm() / 36.0), 0.01);
  EXPECT_GE(p.purity, 0.24);
  EXPECT_LE(p.purity, 0.30);
  ASSERT_TRUE(p.fidelity.has_value());
  EXPECT_GE(*p.fidelity, 0.98);
  EXPECT_NEAR(p.negativity, negativity(p.eqp), 0.0);
}

TEST(Train, DeterministicUnderFixedSeeds) {
  const TrainingSet s = exact_set(40, 9);
  TrainConfig c = fit_config(15, 8);
  c.patience = 3;
  const TrainResult a = train(s, small_config(16, 2), c);
  const TrainResult b = train(s, small_config(16, 2), c);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    EXPECT_EQ(a.history[k].train_loss, b.history[k].train_loss);
    EXPECT_EQ(a.history[k].val_rmse, b.history[k].val_rmse);
  }
  EXPECT_EQ(a.best_val_rmse, b.best_val_rmse);
  EXPECT_TRUE((a.model.parameters().array() == b.model.parameters().array()).all());
}

TEST(Train, ReturnsBestValidationParameters) {
  const TrainingSet s = exact_set(50, 10);
  const TrainResult r = train(s, small_config(16, 1), fit_config(30, 10));
  ASSERT_GE(r.best_epoch, 0);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : r.history) best = std::min(best, e.val_rmse);
  EXPECT_EQ(r.best_val_rmse, best);
  const TrainingSet va{s.inputs.rightCols(10), s.targets.rightCols(10)};
  EXPECT_NEAR(batch_rmse(r.model.forward_batch(va.inputs), va.targets), best, 1e-12);
}

TEST(Train, CapacityIsMonotoneInWidth) {
  const TrainingSet s = exact_set(100, 12);
  double previous = std::numeric_limits<double>::infinity();
  for (int width : {16, 64, 256}) {
    const TrainResult r = train(s, s, small_config(width, 1), fit_config(400, 25));
    const double mse = training_mse(r.model, s);
    EXPECT_LE(mse, 1.05 * previous) << width;
    previous = mse;
  }
}

TEST(Train, RejectsBadInput) {
  const TrainingSet empty{RMatrix(72, 0), RMatrix(36, 0)};
  EXPECT_THROW(train(empty, small_config(8, 1), TrainConfig{}), InvalidInput);
  const TrainingSet wrong{RMatrix::Zero(70, 3), RMatrix::Zero(36, 3)};
  EXPECT_THROW(train(wrong, small_config(8, 1), TrainConfig{}), InvalidInput);
}

TEST(Train, DivergenceIsReported) {
  TrainingSet s = exact_set(10, 13);
  s.targets(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(train(s, s, small_config(8, 1), fit_config(3, 5)), NumericalFailure);
}

TEST(Persistence, RoundTripIsExact) {
  ResidualModel m(small_config(16, 3, Activation::softplus));
  Rng rng(14);
  for (auto& v : m.parameters()) v = rng.normal();
  std::stringstream ss;
  m.save(ss);
  const ResidualModel back = ResidualModel::load(ss);
  EXPECT_EQ(back.config().width, 16);
  EXPECT_EQ(back.config().n_blocks, 3);
  EXPECT_EQ(back.config().activation, Activation::softplus);
  EXPECT_TRUE((back.parameters().array() == m.parameters().array()).all());

  std::string bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(ResidualModel::load(truncated), IoError);
  std::stringstream junk("not a model\n");
  EXPECT_THROW(ResidualModel::load(junk), IoError);
}

TEST(PredictEqp, FrameMismatch) {
  const ResidualModel m(small_config(8, 1));
  const ProjectorFrame f3 = universal_frame(3);
  MeasurementRecord r;
  EXPECT_THROW(predict_eqp(m, r, f3), InvalidInput);
}

TEST(ModelConfig, Defaults) {
  const ModelConfig two = ModelConfig::for_qubits(2);
  EXPECT_EQ(two.input_dim, 72);
  EXPECT_EQ(two.output_dim, 36);
  EXPECT_EQ(two.width, 512);
  EXPECT_EQ(two.n_blocks, 4);
  const ModelConfig three = ModelConfig::for_qubits(3);
  EXPECT_EQ(three.input_dim, 432);
  EXPECT_EQ(three.width, 1024);
  EXPECT_EQ(three.n_blocks, 6);
  EXPECT_EQ(TrainConfig{}.train_fraction, 0.8);
  ModelConfig bad;
  bad.width = 0;
  EXPECT_THROW(bad.validate(), InvalidInput);
  EXPECT_EQ(parse_activation("softplus"), Activation::softplus);
}

}  // namespace
}  // namespace eqpnet

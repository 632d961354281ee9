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

#include <algorithm>
#include <random>
#include <set>

#include <Eigen/QR>
#include <gtest/gtest.h>

#include "eqpnet/ensembles.hpp"
#include "eqpnet/error.hpp"
#include "support.hpp"

namespace eqpnet {
namespace {

void expect_valid(const DensityMatrix& rho) {
  const CMatrix& m = rho.matrix();
  EXPECT_LE((m - m.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(m.trace().real(), 1.0, 1e-10);
  EXPECT_GE(testing::oracle_min_eigenvalue(m), -1e-9);
}

TEST(Ginibre, DeterministicAndSecondMoment) {
  Rng a(1), b(1);
  EXPECT_EQ(ginibre(4, a), ginibre(4, b));
  Rng rng(2);
  double s = 0.0;
  const int samples = 10000;
  for (int i = 0; i < samples; ++i) s += ginibre(4, rng).cwiseAbs2().sum();
  EXPECT_NEAR(s / (16.0 * samples), 2.0, 0.1);
  Rng one(3);
  EXPECT_EQ(ginibre(1, one).size(), 1);
  EXPECT_THROW(ginibre(0, one), InvalidInput);
}

TEST(HaarUnitary, UnitaryDeterministicAndFirstMoment) {
  Rng rng(4);
  double s = 0.0;
  const int samples = 10000;
  for (int i = 0; i < samples; ++i) {
    const CMatrix u = haar_unitary(2, rng);
    if (i < 100) {
      const CMatrix u4 = haar_unitary(4, rng);
      EXPECT_LE((u4.adjoint() * u4 - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
    }
    s += std::norm(u(0, 0));
  }
  EXPECT_NEAR(s / samples, 0.5, 0.025);
  Rng a(5), b(5);
  EXPECT_EQ(haar_unitary(4, a), haar_unitary(4, b));
}

// Independent Bures sampler: std::mt19937_64, Eigen QR with phase fix.
double oracle_bures_mean_purity(int samples) {
  std::mt19937_64 gen(20260101);
  std::normal_distribution<double> nd(0.0, 1.0);
  const auto gin = [&] {
    CMatrix g(4, 4);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) g(r, c) = {nd(gen), nd(gen)};
    return g;
  };
  double sum = 0.0;
  for (int i = 0; i < samples; ++i) {
    const CMatrix z = gin();
    Eigen::HouseholderQR<CMatrix> qr(z);
    CMatrix q = qr.householderQ() * CMatrix::Identity(4, 4);
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < 4; ++k) q.col(k) *= r(k, k) / std::abs(r(k, k));
    const CMatrix g = gin();
    const CMatrix a = (CMatrix::Identity(4, 4) + q.adjoint()) * g;
    CMatrix rho = a * a.adjoint();
    rho /= rho.trace();
    sum += (rho * rho).trace().real();
  }
  return sum / samples;
}

TEST(BuresState, ValidDeterministicAndMatchesOracleMeanPurity) {
  Rng rng(6);
  double sum = 0.0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const DensityMatrix rho = bures_state(2, rng);
    if (i < 10000) expect_valid(rho);
    sum += purity(rho);
  }
  const double oracle = oracle_bures_mean_purity(100000);
  EXPECT_NEAR(sum / draws, oracle, 0.01 * oracle);
  Rng a(7), b(7);
  EXPECT_EQ(bures_state(3, a).matrix(), bures_state(3, b).matrix());
}

TEST(HaarPureNoisy, Examples) {
  Rng rng(8);
  EXPECT_NEAR(purity(haar_pure_noisy(2, 0.0, rng)), 1.0, 1e-12);
  EXPECT_LE((haar_pure_noisy(2, 1.0, rng).matrix() - CMatrix::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff(), 1e-15);
  // Tr[((1-q)P + q I/4)^2] = (1-q)^2 + q(1-q)/2 + q^2/4.
  const double q = 0.5;
  const double expected = (1 - q) * (1 - q) + q * (1 - q) / 2.0 + q * q / 4.0;
  EXPECT_NEAR(purity(haar_pure_noisy(2, q, rng)), expected, 1e-12);
  EXPECT_THROW(haar_pure_noisy(2, 1.5, rng), InvalidInput);
  EXPECT_THROW(haar_pure_noisy(2, -0.1, rng), InvalidInput);
}

TEST(Werner, Examples) {
  EXPECT_LE((werner(0.0).matrix() - CMatrix::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff(), 1e-15);
  const CVector psi = testing::ket({0, testing::kInvSqrt2, -testing::kInvSqrt2, 0});
  EXPECT_LE((werner(1.0).matrix() - testing::projector(psi)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(testing::oracle_min_eigenvalue(partial_transpose(werner(0.5), 1)), -0.125, 1e-12);
  EXPECT_THROW(werner(1.1), InvalidInput);
  EXPECT_THROW(werner(-0.1), InvalidInput);
}

// Truncated-normal mean on [a, b] by composite Simpson quadrature.
double truncated_normal_mean(double mu, double sigma, double a, double b) {
  const int n = 20000;
  const double h = (b - a) / n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = a + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double f = std::exp(-0.5 * (x - mu) * (x - mu) / (sigma * sigma));
    num += w * x * f;
    den += w * f;
  }
  return num / den;
}

TEST(SampleWernerP, TruncationDegenerateLimitAndQuadratureOracle) {
  Rng rng(9);
  const double eps = 1e-3;
  double sum = 0.0;
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) {
    const double p = sample_werner_p(0.5, 0.2, eps, rng);
    ASSERT_GE(p, 0.0);
    ASSERT_LE(p, 1.0 - eps);
    sum += p;
  }
  const double oracle = truncated_normal_mean(0.5, 0.2, 0.0, 1.0 - eps);
  EXPECT_NEAR(sum / samples, oracle, 0.01 * oracle);
  // Asymmetric case where truncation shifts the mean.
  sum = 0.0;
  for (int i = 0; i < samples; ++i) sum += sample_werner_p(0.1, 0.3, eps, rng);
  const double shifted = truncated_normal_mean(0.1, 0.3, 0.0, 1.0 - eps);
  EXPECT_NEAR(sum / samples, shifted, 0.01 * shifted);

  for (int i = 0; i < 100; ++i) EXPECT_NEAR(sample_werner_p(0.5, 1e-9, eps, rng), 0.5, 1e-7);
  EXPECT_THROW(sample_werner_p(50.0, 0.1, eps, rng), InvalidInput);
  EXPECT_THROW(sample_werner_p(0.5, 0.0, eps, rng), InvalidInput);
}

TEST(PauliFamily, Examples) {
  for (int n : {2, 3}) {
    const auto rho = pauli_family(n, 0, 0, 0);
    ASSERT_TRUE(rho.has_value());
    EXPECT_LE((rho->matrix() - CMatrix::Identity(1 << n, 1 << n) / static_cast<double>(1 << n)).cwiseAbs().maxCoeff(), 1e-15);
  }
  const auto x = pauli_family(3, 1, 0, 0);
  ASSERT_TRUE(x.has_value());
  const RVector ev = testing::oracle_eigenvalues(x->matrix());
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(ev[k], k < 4 ? 0.25 : 0.0, 1e-12);
  EXPECT_FALSE(pauli_family(3, 1, 1, 1).has_value());
}

TEST(PauliFamily, AcceptanceInvariantUnderParameterPermutation) {
  const int res = 21;
  for (int n : {2, 3}) {
    const std::vector<Pauli> xs(n, Pauli::X), ys(n, Pauli::Y), zs(n, Pauli::Z);
    const CMatrix sx = pauli_string(xs), sy = pauli_string(ys), sz = pauli_string(zs);
    const auto d = static_cast<double>(1 << n);
    int accepted = 0;
    for (int i = 0; i < res; ++i)
      for (int j = 0; j < res; ++j)
        for (int k = 0; k < res; ++k) {
          std::array<double, 3> r{-1.0 + 0.1 * i, -1.0 + 0.1 * j, -1.0 + 0.1 * k};
          const CMatrix m = (CMatrix::Identity(1 << n, 1 << n) + r[0] * sx + r[1] * sy + r[2] * sz) / d;
          const bool oracle = testing::oracle_min_eigenvalue(m) >= -1e-9;
          const bool got = pauli_family(n, r[0], r[1], r[2]).has_value();
          ASSERT_EQ(got, oracle) << n << " " << r[0] << " " << r[1] << " " << r[2];
          accepted += got;
          std::sort(r.begin(), r.end());
          do {
            ASSERT_EQ(pauli_family(n, r[0], r[1], r[2]).has_value(), got);
          } while (std::next_permutation(r.begin(), r.end()));
        }
    EXPECT_GT(accepted, 0);
  }
}

TEST(PauliFamily, GridAndAutoResolution) {
  const auto grid = pauli_family_grid(3, 21);
  for (const auto& p : grid) EXPECT_TRUE(pauli_family_physical(3, p[0], p[1], p[2]));
  EnsembleSpec spec;
  spec.kind = EnsembleKind::pauli_family;
  spec.n_qubits = 3;
  spec.grid_resolution = 0;
  spec.seed = 3;
  const std::size_t want = grid.size() + 10;
  const EnsembleSampler s(spec, want);
  EXPECT_GT(s.grid_resolution(), 21);
  spec.grid_resolution = 21;
  EXPECT_THROW(EnsembleSampler(spec, want), InvalidInput);
}

TEST(EnsembleSampler, FuzzValidityAndDeterminism) {
  for (EnsembleKind kind : {EnsembleKind::bures, EnsembleKind::haar_noisy, EnsembleKind::werner,
                            EnsembleKind::pauli_family}) {
    EnsembleSpec spec;
    spec.kind = kind;
    spec.n_qubits = kind == EnsembleKind::pauli_family ? 3 : 2;
    spec.grid_resolution = 0;
    spec.seed = 77;
    const std::size_t draws = 10000;
    const EnsembleSampler a(spec, draws), b(spec, draws);
    for (std::size_t i = 0; i < draws; ++i) {
      const GeneratedState s = a.draw(i);
      expect_valid(s.rho);
      if (i < 50) {
        const GeneratedState t = b.draw(i);
        EXPECT_EQ(s.rho.matrix(), t.rho.matrix());
        EXPECT_EQ(s.params, t.params);
      }
    }
  }
}

TEST(EnsembleSampler, PauliSelectionIsDistinct) {
  EnsembleSpec spec;
  spec.kind = EnsembleKind::pauli_family;
  spec.n_qubits = 3;
  spec.seed = 1;
  const EnsembleSampler s(spec, 500);
  std::set<std::vector<double>> seen;
  for (std::size_t i = 0; i < 500; ++i) seen.insert(s.draw(i).params);
  EXPECT_EQ(seen.size(), 500U);
}

TEST(EnsembleSpec, TextRoundTripAndValidation) {
  EnsembleSpec s;
  s.kind = EnsembleKind::werner;
  s.werner_mu = 0.3;
  s.werner_sigma = 0.125;
  s.seed = 123456789012345ULL;
  const EnsembleSpec back = parse_ensemble_spec(s.to_text());
  EXPECT_EQ(back.to_text(), s.to_text());
  EXPECT_EQ(back.seed, s.seed);
  EXPECT_EQ(back.kind, EnsembleKind::werner);
  EXPECT_THROW(parse_ensemble_spec("kind = nope\n"), InvalidInput);
  EXPECT_THROW(parse_ensemble_spec("bogus = 1\n"), InvalidInput);
  EnsembleSpec bad;
  bad.noise_max = 2.0;
  EXPECT_THROW(bad.validate(), InvalidInput);
}

}  // namespace
}  // namespace eqpnet

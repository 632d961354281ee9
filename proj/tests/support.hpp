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

#ifndef EQPNET_TESTS_SUPPORT_HPP
#define EQPNET_TESTS_SUPPORT_HPP

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "eqpnet/ensembles.hpp"
#include "eqpnet/qcore.hpp"
#include "eqpnet/rng.hpp"

namespace eqpnet::testing {

inline const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

inline CVector ket(std::initializer_list<cdouble> a) {
  CVector v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (auto x : a) v[i++] = x;
  return v;
}

inline PureState phi_minus() { return PureState::from_amplitudes(ket({kInvSqrt2, 0, 0, -kInvSqrt2})); }

// Reference spectrum from Eigen's own Hermitian solver.
inline RVector oracle_eigenvalues(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

inline double oracle_min_eigenvalue(const CMatrix& m) { return oracle_eigenvalues(m).minCoeff(); }

inline DensityMatrix random_state(int n, Rng& rng) { return bures_state(n, rng); }

// Product of independent single-qubit Bures-like states.
inline DensityMatrix random_product_state(int n, Rng& rng) {
  CMatrix m = CMatrix::Ones(1, 1);
  for (int q = 0; q < n; ++q) m = kron(m, bures_state(1, rng).matrix());
  return DensityMatrix::from_matrix(m);
}

inline CMatrix projector(const CVector& v) { return v * v.adjoint(); }

}  // namespace eqpnet::testing

#endif  // EQPNET_TESTS_SUPPORT_HPP

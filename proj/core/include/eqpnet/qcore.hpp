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

#ifndef EQPNET_QCORE_HPP
#define EQPNET_QCORE_HPP

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace eqpnet {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Validation thresholds for quantum-state invariants. Every checked
// constructor takes one of these; the defaults are the library-wide values.
struct Tolerances {
  double hermitian = 1e-10;   // max |A - A^dagger|
  double trace = 1e-10;       // |Tr A - 1|
  double psd = -1e-9;         // smallest admissible eigenvalue
  double norm = 1e-12;        // | ||psi|| - 1 |
};

inline constexpr Tolerances kDefaultTolerances{};

// Hermiticity precondition of the eigensolver.
inline constexpr double kEigHermitianTol = 1e-8;

// 2^n, throwing InvalidInput for n outside [1, 16].
std::size_t qubit_dim(int n_qubits);

// Number of qubits of a 2^N dimension; throws InvalidInput for non powers of two.
int qubits_of_dim(std::size_t dim);

class PureState {
 public:
  static PureState from_amplitudes(CVector amplitudes,
                                   const Tolerances& tol = kDefaultTolerances);
  // Normalizes before validating; zero vectors are rejected.
  static PureState normalized(CVector amplitudes);
  static PureState basis(int n_qubits, std::size_t index);

  int n_qubits() const noexcept { return n_qubits_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }
  const CVector& amplitudes() const noexcept { return amplitudes_; }

 private:
  PureState(int n, CVector a) : n_qubits_(n), amplitudes_(std::move(a)) {}
  int n_qubits_;
  CVector amplitudes_;
};

// Single-qubit pure state (cos(theta/2), e^{i phi} sin(theta/2)).
struct BlochQubit {
  double theta = 0.0;
  double phi = 0.0;

  CVector amplitudes() const;
  // Inverse map; the global phase is discarded and phi is wrapped to [0, 2 pi).
  static BlochQubit from_amplitudes(const CVector& v);
};

class DensityMatrix {
 public:
  // Validates Hermiticity, unit trace and positivity against `tol`.
  static DensityMatrix from_matrix(CMatrix m, const Tolerances& tol = kDefaultTolerances);
  static DensityMatrix maximally_mixed(int n_qubits);

  int n_qubits() const noexcept { return n_qubits_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const noexcept { return m_; }
  cdouble operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

 private:
  DensityMatrix(int n, CMatrix m) : n_qubits_(n), m_(std::move(m)) {}
  int n_qubits_;
  CMatrix m_;
};

enum class Pauli { I, X, Y, Z };

struct EigenSystem {
  RVector values;   // descending
  CMatrix vectors;  // orthonormal columns, column k pairs with values[k]
};

DensityMatrix density_from_pure(const PureState& psi);

CMatrix pauli_matrix(Pauli p);
CMatrix pauli_string(std::span<const Pauli> axes);
CMatrix kron(const CMatrix& a, const CMatrix& b);
CVector kron(const CVector& a, const CVector& b);
CVector kron_all(std::span<const CVector> factors);

bool is_hermitian(const CMatrix& m, double tol);

// Cyclic complex Jacobi eigensolver for Hermitian matrices.
EigenSystem hermitian_eig(const CMatrix& m);
RVector hermitian_eigenvalues(const CMatrix& m);
double min_eigenvalue(const CMatrix& m);

// f(M) = V f(Lambda) V^dagger for Hermitian M.
template <class F>
CMatrix apply_spectral(const EigenSystem& es, F&& f) {
  const Eigen::Index n = es.values.size();
  RVector fv(n);
  for (Eigen::Index i = 0; i < n; ++i) fv[i] = f(es.values[i]);
  return es.vectors * fv.asDiagonal() * es.vectors.adjoint();
}

// Square root with eigenvalues clamped at zero.
CMatrix psd_sqrt(const CMatrix& m);

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);
double fidelity(const CMatrix& rho, const CMatrix& sigma);
double purity(const DensityMatrix& rho);
double purity(const CMatrix& rho);

// Tr(a b) for Hermitian a, b.
double hs_inner(const CMatrix& a, const CMatrix& b);
double hs_norm(const CMatrix& a);
double trace_distance(const CMatrix& a, const CMatrix& b);
double von_neumann_entropy(const CMatrix& rho);

CMatrix partial_transpose(const CMatrix& m, int n_qubits, int subsystem);
CMatrix partial_transpose(const DensityMatrix& rho, int subsystem);

// <b| rho |b> as a 2x2 operator on qubit `keep`; `bras` is a state of the
// remaining N-1 qubits in their natural (ascending) order.
CMatrix partial_projection(const DensityMatrix& rho, int keep, const PureState& bras);
// Product-bra variant: one single-qubit factor per qubit, factors[keep] ignored.
CMatrix partial_projection(const CMatrix& rho, int n_qubits, int keep,
                           std::span<const CVector> factors);

// Real coordinates of a d x d Hermitian matrix (diagonal, then sqrt(2) Re and
// sqrt(2) Im of the upper triangle row by row). Euclidean inner products of
// coordinates equal Hilbert-Schmidt inner products of the matrices.
RVector hermitian_coordinates(const CMatrix& m);
CMatrix from_hermitian_coordinates(const RVector& x, Eigen::Index dim);

// Euclidean projection of a Hermitian matrix onto the density matrices: the
// spectrum is projected onto the probability simplex. Returns the total
// negative eigenvalue mass of the input.
double project_to_density(CMatrix& m);

}  // namespace eqpnet

#endif  // EQPNET_QCORE_HPP

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

#include "eqpnet/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "eqpnet/error.hpp"

namespace eqpnet {
namespace {

constexpr double kJacobiOffTol = 1e-12;
constexpr int kJacobiMaxSweeps = 100;

void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidInput(std::string(what) + ": matrix must be square and non-empty");
  }
}

void require_same_shape(const CMatrix& a, const CMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidInput(std::string(what) + ": dimension mismatch (" +
                       std::to_string(a.rows()) + " vs " + std::to_string(b.rows()) + ")");
  }
}

double off_diagonal_norm(const CMatrix& a) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      if (r != c) s += std::norm(a(r, c));
  return std::sqrt(s);
}

}  // namespace

std::size_t qubit_dim(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 16) {
    throw InvalidInput("qubit count must be in [1, 16], got " + std::to_string(n_qubits));
  }
  return std::size_t{1} << n_qubits;
}

int qubits_of_dim(std::size_t dim) {
  int n = 0;
  while ((std::size_t{1} << n) < dim) ++n;
  if (dim < 2 || (std::size_t{1} << n) != dim) {
    throw InvalidInput("dimension " + std::to_string(dim) + " is not a qubit register");
  }
  return n;
}

// ---------------------------------------------------------------------------
// States

PureState PureState::from_amplitudes(CVector amplitudes, const Tolerances& tol) {
  const int n = qubits_of_dim(static_cast<std::size_t>(amplitudes.size()));
  const double norm = amplitudes.norm();
  if (std::abs(norm - 1.0) > tol.norm) {
    throw InvalidInput("pure state is not normalized (norm " + std::to_string(norm) + ")");
  }
  return PureState(n, std::move(amplitudes));
}

PureState PureState::normalized(CVector amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw InvalidInput("cannot normalize a zero or non-finite state vector");
  }
  amplitudes /= norm;
  return from_amplitudes(std::move(amplitudes));
}

PureState PureState::basis(int n_qubits, std::size_t index) {
  const std::size_t d = qubit_dim(n_qubits);
  if (index >= d) throw InvalidInput("basis index out of range");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(d));
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return PureState(n_qubits, std::move(v));
}

CVector BlochQubit::amplitudes() const {
  CVector v(2);
  v[0] = std::cos(theta / 2.0);
  v[1] = std::polar(std::sin(theta / 2.0), phi);
  return v;
}

BlochQubit BlochQubit::from_amplitudes(const CVector& v) {
  if (v.size() != 2) throw InvalidInput("Bloch angles need a single-qubit vector");
  const double n = v.norm();
  if (!(n > 0.0)) throw InvalidInput("zero vector has no Bloch angles");
  const double a = std::abs(v[0]) / n;
  const double b = std::abs(v[1]) / n;
  BlochQubit q;
  q.theta = 2.0 * std::atan2(b, a);
  if (b > 1e-15 && a > 1e-15) {
    double phi = std::arg(v[1]) - std::arg(v[0]);
    phi = std::fmod(phi, 2.0 * std::numbers::pi);
    if (phi < 0.0) phi += 2.0 * std::numbers::pi;
    if (phi >= 2.0 * std::numbers::pi) phi = 0.0;
    q.phi = phi;
  } else if (b > 1e-15) {
    q.phi = 0.0;
  }
  return q;
}

DensityMatrix DensityMatrix::from_matrix(CMatrix m, const Tolerances& tol) {
  require_square(m, "density matrix");
  const int n = qubits_of_dim(static_cast<std::size_t>(m.rows()));
  const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol.hermitian) {
    throw InvalidInput("density matrix is not Hermitian (deviation " + std::to_string(herm) + ")");
  }
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > tol.trace) {
    throw InvalidInput("density matrix trace " + std::to_string(tr) + " is not 1");
  }
  // Symmetrize so downstream code sees an exactly Hermitian operator.
  m = 0.5 * (m + m.adjoint()).eval();
  const double lmin = min_eigenvalue(m);
  if (lmin < tol.psd) {
    throw InvalidInput("density matrix is not positive semidefinite (min eigenvalue " +
                       std::to_string(lmin) + ")");
  }
  return DensityMatrix(n, std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
  const auto d = static_cast<Eigen::Index>(qubit_dim(n_qubits));
  return DensityMatrix(n_qubits, CMatrix::Identity(d, d) / static_cast<double>(d));
}

DensityMatrix density_from_pure(const PureState& psi) {
  const CVector& a = psi.amplitudes();
  if (std::abs(a.norm() - 1.0) > kDefaultTolerances.norm) {
    throw InvalidInput("density_from_pure: state is not normalized");
  }
  return DensityMatrix::from_matrix(a * a.adjoint());
}

// ---------------------------------------------------------------------------
// Tensor products and Paulis

CMatrix pauli_matrix(Pauli p) {
  CMatrix m(2, 2);
  const cdouble i(0.0, 1.0);
  switch (p) {
    case Pauli::I: m << 1.0, 0.0, 0.0, 1.0; break;
    case Pauli::X: m << 0.0, 1.0, 1.0, 0.0; break;
    case Pauli::Y: m << 0.0, -i, i, 0.0; break;
    case Pauli::Z: m << 1.0, 0.0, 0.0, -1.0; break;
  }
  return m;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

CVector kron_all(std::span<const CVector> factors) {
  if (factors.empty()) throw InvalidInput("kron_all: no factors");
  CVector out = factors[0];
  for (std::size_t k = 1; k < factors.size(); ++k) out = kron(out, factors[k]);
  return out;
}

CMatrix pauli_string(std::span<const Pauli> axes) {
  if (axes.empty()) throw InvalidInput("pauli_string: need at least one axis");
  CMatrix out = pauli_matrix(axes[0]);
  for (std::size_t k = 1; k < axes.size(); ++k) out = kron(out, pauli_matrix(axes[k]));
  return out;
}

// ---------------------------------------------------------------------------
// Spectral routines

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return m.size() == 0 || (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

EigenSystem hermitian_eig(const CMatrix& m) {
  require_square(m, "hermitian_eig");
  if (!is_hermitian(m, kEigHermitianTol)) {
    throw InvalidInput("hermitian_eig: matrix is not Hermitian");
  }
  const Eigen::Index n = m.rows();
  CMatrix a = 0.5 * (m + m.adjoint());
  CMatrix v = CMatrix::Identity(n, n);
  const double scale = std::max(1.0, a.norm());

  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= kJacobiOffTol * scale) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const cdouble apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag < 1e-300) continue;
        const cdouble phase = apq / mag;  // e^{i alpha}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // J restricted to (p, q): [[c, s], [-s e^{-i a}, c e^{-i a}]]; A <- J^dagger A J.
        const cdouble jqp = -s * std::conj(phase);
        const cdouble jqq = c * std::conj(phase);
        for (Eigen::Index k = 0; k < n; ++k) {
          const cdouble akp = a(k, p);
          const cdouble akq = a(k, q);
          a(k, p) = c * akp + jqp * akq;
          a(k, q) = s * akp + jqq * akq;
          const cdouble vkp = v(k, p);
          const cdouble vkq = v(k, q);
          v(k, p) = c * vkp + jqp * vkq;
          v(k, q) = s * vkp + jqq * vkq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const cdouble apk = a(p, k);
          const cdouble aqk = a(q, k);
          a(p, k) = c * apk + std::conj(jqp) * aqk;
          a(q, k) = s * apk + std::conj(jqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return a(x, x).real() > a(y, y).real();
  });
  EigenSystem es{RVector(n), CMatrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    es.values[k] = a(src, src).real();
    es.vectors.col(k) = v.col(src);
  }
  return es;
}

RVector hermitian_eigenvalues(const CMatrix& m) { return hermitian_eig(m).values; }

double min_eigenvalue(const CMatrix& m) {
  const RVector ev = hermitian_eigenvalues(m);
  return ev[ev.size() - 1];
}

CMatrix psd_sqrt(const CMatrix& m) {
  return apply_spectral(hermitian_eig(m), [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

double fidelity(const CMatrix& rho, const CMatrix& sigma) {
  require_square(rho, "fidelity");
  require_same_shape(rho, sigma, "fidelity");
  const CMatrix sr = psd_sqrt(rho);
  const CMatrix inner = sr * sigma * sr;
  const RVector ev = hermitian_eigenvalues(0.5 * (inner + inner.adjoint()));
  double root_trace = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) root_trace += std::sqrt(std::max(ev[i], 0.0));
  return std::clamp(root_trace * root_trace, 0.0, 1.0);
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return fidelity(rho.matrix(), sigma.matrix());
}

double purity(const CMatrix& rho) { return hs_inner(rho, rho); }
double purity(const DensityMatrix& rho) { return purity(rho.matrix()); }

double hs_inner(const CMatrix& a, const CMatrix& b) {
  require_same_shape(a, b, "hs_inner");
  // Tr(a b) = sum_ij a_ij b_ji
  return (a.transpose().cwiseProduct(b)).sum().real();
}

double hs_norm(const CMatrix& a) { return a.norm(); }

double trace_distance(const CMatrix& a, const CMatrix& b) {
  require_same_shape(a, b, "trace_distance");
  const RVector ev = hermitian_eigenvalues(a - b);
  return 0.5 * ev.cwiseAbs().sum();
}

double von_neumann_entropy(const CMatrix& rho) {
  const RVector ev = hermitian_eigenvalues(rho);
  double s = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > 0.0) s -= ev[i] * std::log(ev[i]);
  return s;
}

// ---------------------------------------------------------------------------
// Subsystem operations. Qubit 0 is the most significant tensor factor.

CMatrix partial_transpose(const CMatrix& m, int n_qubits, int subsystem) {
  const auto d = static_cast<Eigen::Index>(qubit_dim(n_qubits));
  if (m.rows() != d || m.cols() != d) throw InvalidInput("partial_transpose: dimension mismatch");
  if (subsystem < 0 || subsystem >= n_qubits) {
    throw InvalidInput("partial_transpose: subsystem " + std::to_string(subsystem) +
                       " out of range");
  }
  const Eigen::Index bit = Eigen::Index{1} << (n_qubits - 1 - subsystem);
  CMatrix out(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      // Swap the designated bit between row and column indices.
      const Eigen::Index rb = r & bit;
      const Eigen::Index cb = c & bit;
      const Eigen::Index r2 = (r & ~bit) | cb;
      const Eigen::Index c2 = (c & ~bit) | rb;
      out(r2, c2) = m(r, c);
    }
  }
  return out;
}

CMatrix partial_transpose(const DensityMatrix& rho, int subsystem) {
  return partial_transpose(rho.matrix(), rho.n_qubits(), subsystem);
}

namespace {

// Index of the full register obtained by inserting bit `b` for qubit `keep`
// into the (N-1)-qubit complement index `rest`.
Eigen::Index insert_bit(Eigen::Index rest, int n_qubits, int keep, Eigen::Index b) {
  const int low_bits = n_qubits - 1 - keep;
  const Eigen::Index low = rest & ((Eigen::Index{1} << low_bits) - 1);
  const Eigen::Index high = rest >> low_bits;
  return (((high << 1) | b) << low_bits) | low;
}

CMatrix project_complement(const CMatrix& rho, int n_qubits, int keep, const CVector& bra) {
  const Eigen::Index rest_dim = Eigen::Index{1} << (n_qubits - 1);
  CMatrix out = CMatrix::Zero(2, 2);
  for (Eigen::Index a = 0; a < 2; ++a) {
    for (Eigen::Index b = 0; b < 2; ++b) {
      cdouble acc = 0.0;
      for (Eigen::Index i = 0; i < rest_dim; ++i) {
        const cdouble bi = std::conj(bra[i]);
        if (bi == cdouble(0.0)) continue;
        const Eigen::Index row = insert_bit(i, n_qubits, keep, a);
        for (Eigen::Index j = 0; j < rest_dim; ++j) {
          acc += bi * rho(row, insert_bit(j, n_qubits, keep, b)) * bra[j];
        }
      }
      out(a, b) = acc;
    }
  }
  return 0.5 * (out + out.adjoint());
}

}  // namespace

CMatrix partial_projection(const DensityMatrix& rho, int keep, const PureState& bras) {
  const int n = rho.n_qubits();
  if (n < 2) throw InvalidInput("partial_projection: need at least two qubits");
  if (keep < 0 || keep >= n) throw InvalidInput("partial_projection: kept subsystem out of range");
  if (static_cast<Eigen::Index>(bras.dim()) != (Eigen::Index{1} << (n - 1))) {
    throw InvalidInput("partial_projection: bra dimension does not match the complement");
  }
  return project_complement(rho.matrix(), n, keep, bras.amplitudes());
}

CMatrix partial_projection(const CMatrix& rho, int n_qubits, int keep,
                           std::span<const CVector> factors) {
  if (n_qubits < 2 || keep < 0 || keep >= n_qubits ||
      static_cast<int>(factors.size()) != n_qubits) {
    throw InvalidInput("partial_projection: factor count does not match the register");
  }
  std::vector<CVector> rest;
  rest.reserve(factors.size() - 1);
  for (int k = 0; k < n_qubits; ++k) {
    if (k == keep) continue;
    if (factors[static_cast<std::size_t>(k)].size() != 2) {
      throw InvalidInput("partial_projection: factors must be single-qubit vectors");
    }
    rest.push_back(factors[static_cast<std::size_t>(k)]);
  }
  return project_complement(rho, n_qubits, keep, kron_all(rest));
}

RVector hermitian_coordinates(const CMatrix& m) {
  const Eigen::Index d = m.rows();
  RVector out(d * d);
  Eigen::Index k = 0;
  const double r2 = std::numbers::sqrt2;
  for (Eigen::Index i = 0; i < d; ++i) out[k++] = m(i, i).real();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      out[k++] = r2 * m(i, j).real();
      out[k++] = r2 * m(i, j).imag();
    }
  return out;
}

CMatrix from_hermitian_coordinates(const RVector& x, Eigen::Index dim) {
  if (x.size() != dim * dim) throw InvalidInput("hermitian coordinates have the wrong length");
  CMatrix m(dim, dim);
  Eigen::Index k = 0;
  const double r2 = std::numbers::sqrt2;
  for (Eigen::Index i = 0; i < dim; ++i) m(i, i) = x[k++];
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = i + 1; j < dim; ++j) {
      const cdouble v(x[k] / r2, x[k + 1] / r2);
      k += 2;
      m(i, j) = v;
      m(j, i) = std::conj(v);
    }
  return m;
}

double project_to_density(CMatrix& m) {
  require_square(m, "project_to_density");
  const EigenSystem es = hermitian_eig(0.5 * (m + m.adjoint()));
  const Eigen::Index n = es.values.size();
  double clipped = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) clipped += std::max(-es.values[i], 0.0);
  // Euclidean projection of the spectrum onto the probability simplex.
  // values are sorted descending.
  double cumulative = 0.0;
  double shift = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += es.values[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (es.values[k] - candidate > 0.0) shift = candidate;
  }
  RVector lam(n);
  for (Eigen::Index i = 0; i < n; ++i) lam[i] = std::max(es.values[i] - shift, 0.0);
  lam /= lam.sum();
  m = es.vectors * lam.asDiagonal() * es.vectors.adjoint();
  m = 0.5 * (m + m.adjoint()).eval();
  return clipped;
}

}  // namespace eqpnet

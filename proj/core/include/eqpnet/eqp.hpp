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

#ifndef EQPNET_EQP_HPP
#define EQPNET_EQP_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "eqpnet/measurement.hpp"
#include "eqpnet/qcore.hpp"

namespace eqpnet {

// A pure product state |a_0> (x) ... (x) |a_{N-1}> together with its overlap
// g = <d|rho|d> with the state that produced it.
struct Atom {
  std::vector<BlochQubit> factors;
  double overlap = 0.0;

  static Atom from_vectors(std::span<const CVector> factors, double overlap = 0.0);
  int n_qubits() const noexcept { return static_cast<int>(factors.size()); }
  std::vector<CVector> factor_vectors() const;
  CVector vector() const;
  CMatrix projector() const;
};

std::vector<Atom> frame_atoms(const ProjectorFrame& frame);

struct StationaryOptions {
  int restarts = 200;
  int max_iter = 500;
  double conv_tol = 1e-10;
  double dedup_tol = 1e-8;
  int branch_cap = 64;
  std::uint64_t seed = 0x5eed;

  static StationaryOptions defaults_for(int n_qubits);
};

// Product states whose every factor is an eigenvector of the operator
// reduced onto that factor by the other factors, all with the common
// eigenvalue g. Alternating eigen-iteration from Haar-random product seeds;
// each seed is followed along every principal/minor eigenvector policy per
// subsystem (capped at branch_cap), so local maxima, minima and saddles are
// all collected. Throws EmptyDictionary when no seed converges.
std::vector<Atom> stationary_points(const DensityMatrix& rho, const StationaryOptions& opts);

// Stationarity residual max_j || M_j a_j - g a_j || of a product state for
// a Hermitian operator.
double stationarity_residual(const CMatrix& op, int n_qubits, const Atom& atom);

// G_ij = Tr(d_i d_j) = prod_k |<a_ik|a_jk>|^2
RMatrix gram_matrix(std::span<const Atom> atoms);

// Minimum-norm solution of G p = g via the eigen-pseudoinverse with
// relative cutoff `rel_cutoff`.
RVector pinv_solve(const RMatrix& g, const RVector& rhs, double rel_cutoff = 1e-10);

struct QuasiProbability {
  std::vector<Atom> atoms;
  RVector coeffs;
  double residual_norm = 0.0;  // || rho - sum p_i d_i ||_HS
  double negativity = 0.0;     // sum max(-p_i, 0)
};

double negativity(std::span<const double> p);
double negativity(const RVector& p);

CMatrix combine(std::span<const Atom> atoms, const RVector& coeffs);

QuasiProbability solve_gram(std::span<const Atom> atoms, const DensityMatrix& rho);

enum class Verdict { classical_feasible, entangled };
std::string_view to_string(Verdict v);

struct CertifyOptions {
  double feas_tol = 1e-6;
  // Column generation: each round adds the best local maxima of
  // <d|rho - sigma|d> over product states d to the dictionary.
  int max_rounds = 400;
  int seeds_per_round = 24;
  int atoms_per_round = 4;
  std::uint64_t seed = 0xce27;

  // 3/sqrt(shots) for finite-shot data, the exact-data default otherwise.
  static CertifyOptions for_shots(std::uint64_t shots);
};

struct Certificate {
  Verdict verdict = Verdict::entangled;
  double residual = 0.0;           // best nonnegative HS residual found
  double distance_lower_bound = 0.0;  // witness bound on the distance to the cone
  RVector weights;                 // nonnegative weights over `atoms`
  std::vector<Atom> atoms;         // final dictionary (input atoms first)
  int rounds = 0;
};

// Nonnegative least-squares feasibility of rho within the cone spanned by
// `atoms`, enlarged by column generation when the seed dictionary alone
// leaves a residual. Returns entangled once a product-state witness bounds
// the distance to the separable cone above feas_tol, or when the round
// budget is exhausted with residual > feas_tol.
Certificate nnls_certify(std::span<const Atom> atoms, const DensityMatrix& rho,
                         const CertifyOptions& opts = {});

// Minimum-norm frame expansion used as the fixed-length regression target.
class CanonicalMap {
 public:
  explicit CanonicalMap(const ProjectorFrame& frame);

  const ProjectorFrame& frame() const noexcept { return *frame_; }
  std::size_t size() const noexcept { return frame_->size(); }
  // p = G^+ probs over the complete frame.
  RVector from_probs(std::span<const double> full_probs) const;
  RVector qp(const CMatrix& rho) const;
  RVector qp(const DensityMatrix& rho) const;
  CMatrix combine(std::span<const double> p) const;
  const RMatrix& gram_pinv() const noexcept { return pinv_; }

 private:
  std::shared_ptr<const ProjectorFrame> frame_;
  RMatrix pinv_;
};

// Shared, lazily built map for the universal frame of N qubits.
const CanonicalMap& canonical_map(int n_qubits);

RVector canonical_qp(const DensityMatrix& rho, const ProjectorFrame& frame);

struct Reconstruction {
  DensityMatrix rho;
  bool renormalized = false;  // |Tr - 1| > 1e-8 before normalization
  bool psd_violation = false; // min eigenvalue < -1e-6 before projection
  double trace_before = 1.0;
  double min_eigenvalue_before = 0.0;
};

Reconstruction reconstruct(std::span<const Atom> atoms, const RVector& coeffs);
Reconstruction reconstruct(const QuasiProbability& qp);
Reconstruction reconstruct(std::span<const double> canonical, const ProjectorFrame& frame);
// Shared normalization path for a Hermitian operator.
Reconstruction reconstruct_from_operator(CMatrix m);

}  // namespace eqpnet

#endif  // EQPNET_EQP_HPP

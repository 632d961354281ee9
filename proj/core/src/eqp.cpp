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

#include "eqpnet/eqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "eqpnet/ensembles.hpp"
#include "eqpnet/error.hpp"
#include "eqpnet/nnls.hpp"

namespace eqpnet {
namespace {

CVector random_qubit(Rng& rng) {
  CVector v(2);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double re = rng.normal();
    const double im = rng.normal();
    v[i] = cdouble(re, im);
  }
  return v / v.norm();
}

double expectation(const CMatrix& op, const CVector& v) { return v.dot(op * v).real(); }

double factor_residual(const CMatrix& m, const CVector& a) {
  const double g = expectation(m, a);
  return (m * a - g * a).norm();
}

double residual_of(const CMatrix& op, int n, std::span<const CVector> factors) {
  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    worst = std::max(worst, factor_residual(partial_projection(op, n, j, factors),
                                            factors[static_cast<std::size_t>(j)]));
  }
  return worst;
}

// Alternating eigen-iteration. Bit j of `policy` selects the minor (1) or
// principal (0) eigenvector for subsystem j. Returns the converged factors or
// nullopt when the residual stays above conv_tol.
struct Ascent {
  std::vector<CVector> factors;
  bool converged = false;
};

// Closed-form spectrum of a 2x2 Hermitian matrix; column 0 is principal.
EigenSystem eig2(const CMatrix& m) {
  const double a = m(0, 0).real();
  const double c = m(1, 1).real();
  const cdouble b = m(0, 1);
  const double mean = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), std::abs(b));
  EigenSystem es{RVector(2), CMatrix(2, 2)};
  es.values << mean + rad, mean - rad;
  for (int k = 0; k < 2; ++k) {
    const double lam = es.values[k];
    CVector u(2), v(2);
    u << b, lam - a;
    v << lam - c, std::conj(b);
    CVector w = u.norm() >= v.norm() ? u : v;
    const double nw = w.norm();
    if (nw < 1e-300) {
      w = CVector::Zero(2);
      w[k] = 1.0;
    } else {
      w /= nw;
    }
    es.vectors.col(k) = w;
  }
  return es;
}

// Alternating eigen-iteration. Bit j of `policy` selects the minor (1) or
// principal (0) eigenvector for subsystem j. Runs whose residual stops
// shrinking are abandoned early.
Ascent iterate(const CMatrix& op, int n, std::vector<CVector> factors, unsigned policy,
               int max_iter, double conv_tol) {
  double checkpoint = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    for (int j = 0; j < n; ++j) {
      const CMatrix m = partial_projection(op, n, j, factors);
      const EigenSystem es = eig2(m);
      const double gap = es.values[0] - es.values[1];
      const double scale = std::max(1e-300, std::abs(es.values[0]) + std::abs(es.values[1]));
      // Degenerate reduced operator: every vector is an eigenvector, keep the
      // current factor so distinct seeds give distinct representatives.
      if (gap <= 1e-14 * scale) continue;
      const Eigen::Index col = ((policy >> j) & 1U) ? 1 : 0;
      factors[static_cast<std::size_t>(j)] = es.vectors.col(col);
    }
    const double r = residual_of(op, n, factors);
    if (r <= conv_tol) return {std::move(factors), true};
    if (it % 50 == 49) {
      if (r > 0.5 * checkpoint) break;
      checkpoint = r;
    }
  }
  return {std::move(factors), false};
}

std::optional<std::vector<CVector>> alternate(const CMatrix& op, int n,
                                              std::vector<CVector> factors, unsigned policy,
                                              int max_iter, double conv_tol) {
  Ascent a = iterate(op, n, std::move(factors), policy, max_iter, conv_tol);
  if (!a.converged) return std::nullopt;
  return std::move(a.factors);
}

bool same_atom(const std::vector<CVector>& a, const std::vector<CVector>& b, double dedup_tol) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::norm(a[k].dot(b[k])) <= 1.0 - dedup_tol) return false;
  }
  return true;
}

struct Candidate {
  std::vector<CVector> factors;
  double value;
  bool converged = true;
};

// Deduplicating insert; returns true when the candidate was new.
bool insert_unique(std::vector<Candidate>& pool, Candidate c, double dedup_tol) {
  for (const auto& p : pool)
    if (same_atom(p.factors, c.factors, dedup_tol)) return false;
  pool.push_back(std::move(c));
  return true;
}

RMatrix coordinate_columns(std::span<const Atom> atoms) {
  if (atoms.empty()) return RMatrix();
  const CMatrix first = atoms[0].projector();
  RMatrix a(first.rows() * first.rows(), static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    a.col(static_cast<Eigen::Index>(i)) = hermitian_coordinates(atoms[i].projector());
  }
  return a;
}

}  // namespace

// ---------------------------------------------------------------------------

Atom Atom::from_vectors(std::span<const CVector> factors, double overlap) {
  Atom atom;
  atom.overlap = overlap;
  for (const auto& f : factors) atom.factors.push_back(BlochQubit::from_amplitudes(f));
  return atom;
}

std::vector<CVector> Atom::factor_vectors() const {
  std::vector<CVector> out;
  out.reserve(factors.size());
  for (const auto& f : factors) out.push_back(f.amplitudes());
  return out;
}

CVector Atom::vector() const {
  const auto f = factor_vectors();
  return kron_all(f);
}

CMatrix Atom::projector() const {
  const CVector v = vector();
  return v * v.adjoint();
}

std::vector<Atom> frame_atoms(const ProjectorFrame& frame) {
  std::vector<Atom> out;
  out.reserve(frame.size());
  for (const auto& fa : frame.atoms()) {
    std::vector<CVector> f;
    for (LocalState s : fa.locals) f.push_back(local_state_vector(s));
    out.push_back(Atom::from_vectors(f, 0.0));
  }
  return out;
}

StationaryOptions StationaryOptions::defaults_for(int n_qubits) {
  StationaryOptions o;
  o.restarts = n_qubits >= 3 ? 1000 : 200;
  return o;
}

double stationarity_residual(const CMatrix& op, int n_qubits, const Atom& atom) {
  const auto f = atom.factor_vectors();
  return residual_of(op, n_qubits, f);
}

std::vector<Atom> stationary_points(const DensityMatrix& rho, const StationaryOptions& opts) {
  if (opts.restarts < 1) throw InvalidInput("stationary_points: restarts must be >= 1");
  const int n = rho.n_qubits();
  if (n < 2) throw InvalidInput("stationary_points: need at least two subsystems");
  const CMatrix& op = rho.matrix();
  const unsigned policies = std::min<unsigned>(1U << n, static_cast<unsigned>(std::max(1, opts.branch_cap)));

  std::vector<Candidate> pool;
  Rng rng = Rng::substream(opts.seed, 0);
  for (int r = 0; r < opts.restarts; ++r) {
    std::vector<CVector> seed;
    for (int k = 0; k < n; ++k) seed.push_back(random_qubit(rng));
    for (unsigned policy = 0; policy < policies; ++policy) {
      auto conv = alternate(op, n, seed, policy, opts.max_iter, opts.conv_tol);
      if (!conv) continue;
      const double g = expectation(op, kron_all(*conv));
      insert_unique(pool, Candidate{std::move(*conv), g}, opts.dedup_tol);
    }
  }
  if (pool.empty()) throw EmptyDictionary("stationary_points: no seed converged");

  std::stable_sort(pool.begin(), pool.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
  std::vector<Atom> atoms;
  atoms.reserve(pool.size());
  for (const auto& c : pool) atoms.push_back(Atom::from_vectors(c.factors, std::clamp(c.value, 0.0, 1.0)));
  return atoms;
}

RMatrix gram_matrix(std::span<const Atom> atoms) {
  const auto k = static_cast<Eigen::Index>(atoms.size());
  std::vector<std::vector<CVector>> f;
  f.reserve(atoms.size());
  for (const auto& a : atoms) f.push_back(a.factor_vectors());
  RMatrix g(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    g(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < k; ++j) {
      double prod = 1.0;
      const auto& fi = f[static_cast<std::size_t>(i)];
      const auto& fj = f[static_cast<std::size_t>(j)];
      if (fi.size() != fj.size()) throw InvalidInput("gram_matrix: atoms of different size");
      for (std::size_t q = 0; q < fi.size(); ++q) prod *= std::norm(fi[q].dot(fj[q]));
      g(i, j) = prod;
      g(j, i) = prod;
    }
  }
  return g;
}

RVector pinv_solve(const RMatrix& g, const RVector& rhs, double rel_cutoff) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(g);
  const RVector& lam = es.eigenvalues();
  const double lmax = lam.cwiseAbs().maxCoeff();
  RVector coef = es.eigenvectors().transpose() * rhs;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    coef[i] = std::abs(lam[i]) > rel_cutoff * lmax ? coef[i] / lam[i] : 0.0;
  }
  return es.eigenvectors() * coef;
}

double negativity(std::span<const double> p) {
  double s = 0.0;
  for (double v : p) s += std::max(-v, 0.0);
  return s;
}

double negativity(const RVector& p) {
  return negativity(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

CMatrix combine(std::span<const Atom> atoms, const RVector& coeffs) {
  if (atoms.empty() || static_cast<Eigen::Index>(atoms.size()) != coeffs.size()) {
    throw InvalidInput("coefficient count does not match atom count");
  }
  CMatrix sum = CMatrix::Zero(atoms[0].vector().size(), atoms[0].vector().size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    sum += coeffs[static_cast<Eigen::Index>(i)] * atoms[i].projector();
  }
  return sum;
}

QuasiProbability solve_gram(std::span<const Atom> atoms, const DensityMatrix& rho) {
  if (atoms.empty()) throw InvalidInput("solve_gram: empty dictionary");
  QuasiProbability qp;
  qp.atoms.assign(atoms.begin(), atoms.end());
  const RMatrix g = gram_matrix(atoms);
  RVector rhs(static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const CVector v = atoms[i].vector();
    rhs[static_cast<Eigen::Index>(i)] = expectation(rho.matrix(), v);
  }
  qp.coeffs = pinv_solve(g, rhs);
  qp.residual_norm = hs_norm(rho.matrix() - combine(atoms, qp.coeffs));
  qp.negativity = negativity(qp.coeffs);
  return qp;
}

std::string_view to_string(Verdict v) {
  return v == Verdict::classical_feasible ? "classical-feasible" : "entangled";
}

CertifyOptions CertifyOptions::for_shots(std::uint64_t shots) {
  CertifyOptions o;
  if (shots > 0) o.feas_tol = 3.0 / std::sqrt(static_cast<double>(shots));
  return o;
}

Certificate nnls_certify(std::span<const Atom> atoms, const DensityMatrix& rho,
                         const CertifyOptions& opts) {
  const int n = rho.n_qubits();
  const CMatrix& target = rho.matrix();
  const RVector b = hermitian_coordinates(target);
  const auto d = static_cast<Eigen::Index>(rho.dim());

  Certificate cert;
  cert.atoms.assign(atoms.begin(), atoms.end());
  std::vector<CMatrix> projectors;
  for (const auto& a : cert.atoms) projectors.push_back(a.projector());
  RMatrix cols = coordinate_columns(cert.atoms);

  Rng rng = Rng::substream(opts.seed, 0);
  for (int round = 0;; ++round) {
    cert.rounds = round;
    NnlsResult fit = cols.cols() > 0 ? nnls(cols, b) : NnlsResult{RVector(), b.norm(), 0};
    cert.weights = fit.x;
    cert.residual = fit.residual_norm;
    if (cert.residual <= opts.feas_tol) {
      cert.verdict = Verdict::classical_feasible;
      return cert;
    }
    if (round >= opts.max_rounds) break;

    CMatrix sigma = CMatrix::Zero(d, d);
    for (Eigen::Index i = 0; i < fit.x.size(); ++i)
      if (fit.x[i] != 0.0) sigma += fit.x[i] * projectors[static_cast<std::size_t>(i)];
    const CMatrix residual_op = target - sigma;

    // Local maxima of <d|R|d> over product states.
    std::vector<Candidate> found;
    for (int s = 0; s < opts.seeds_per_round; ++s) {
      std::vector<CVector> seed;
      for (int k = 0; k < n; ++k) seed.push_back(random_qubit(rng));
      // Unconverged ascents still improve the fit, so they are kept as atoms;
      // only converged maxima feed the witness bound.
      Ascent asc = iterate(residual_op, n, std::move(seed), 0U, 300, 1e-9);
      const double v = expectation(residual_op, kron_all(asc.factors));
      insert_unique(found, Candidate{std::move(asc.factors), v, asc.converged}, 1e-8);
    }
    if (found.empty()) break;
    std::stable_sort(found.begin(), found.end(),
                     [](const Candidate& x, const Candidate& y) { return x.value > y.value; });
    const double best = found.front().value;

    // W = R - best * I is nonpositive on every product state, so it bounds
    // the distance from rho to the cone: ||rho - s|| >= Tr(rho W) / ||W||.
    const CMatrix w = residual_op - best * CMatrix::Identity(d, d);
    const double wn = hs_norm(w);
    if (wn > 0.0 && found.front().converged) {
      cert.distance_lower_bound = std::max(cert.distance_lower_bound, hs_inner(target, w) / wn);
    }
    if (cert.distance_lower_bound > opts.feas_tol || best <= 1e-15) break;

    const Eigen::Index old_cols = cols.cols();
    const int add = std::min<int>(opts.atoms_per_round, static_cast<int>(found.size()));
    int added = 0;
    for (int k = 0; k < add; ++k) {
      if (found[static_cast<std::size_t>(k)].value <= 0.0) break;
      Atom atom = Atom::from_vectors(found[static_cast<std::size_t>(k)].factors,
                                     expectation(target, kron_all(found[static_cast<std::size_t>(k)].factors)));
      projectors.push_back(atom.projector());
      cert.atoms.push_back(std::move(atom));
      ++added;
    }
    if (added == 0) break;
    cols.conservativeResize(b.size(), old_cols + added);
    for (int k = 0; k < added; ++k) {
      cols.col(old_cols + k) = hermitian_coordinates(projectors[static_cast<std::size_t>(old_cols + k)]);
    }
  }
  cert.verdict = Verdict::entangled;
  return cert;
}

// ---------------------------------------------------------------------------

CanonicalMap::CanonicalMap(const ProjectorFrame& frame)
    : frame_(std::make_shared<const ProjectorFrame>(frame)) {
  const auto atoms = frame_atoms(*frame_);
  const RMatrix g = gram_matrix(atoms);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(g);
  const RVector& lam = es.eigenvalues();
  const double cutoff = 1e-10 * lam.cwiseAbs().maxCoeff();
  RVector inv(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) inv[i] = lam[i] > cutoff ? 1.0 / lam[i] : 0.0;
  pinv_ = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

RVector CanonicalMap::from_probs(std::span<const double> full_probs) const {
  if (full_probs.size() != frame_->size()) {
    throw InvalidInput("canonical_qp: expected probabilities for the complete frame");
  }
  const Eigen::Map<const RVector> p(full_probs.data(), static_cast<Eigen::Index>(full_probs.size()));
  return pinv_ * p;
}

RVector CanonicalMap::qp(const CMatrix& rho) const {
  std::vector<std::size_t> all(frame_->size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<double> probs;
  probs.reserve(all.size());
  for (const auto& a : frame_->atoms()) probs.push_back(a.vector.dot(rho * a.vector).real());
  return from_probs(probs);
}

RVector CanonicalMap::qp(const DensityMatrix& rho) const { return qp(rho.matrix()); }

CMatrix CanonicalMap::combine(std::span<const double> p) const {
  if (p.size() != frame_->size()) throw InvalidInput("canonical vector length does not match the frame");
  const auto d = static_cast<Eigen::Index>(frame_->dim());
  CMatrix sum = CMatrix::Zero(d, d);
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] * frame_->atom(i).projector;
  return sum;
}

const CanonicalMap& canonical_map(int n_qubits) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<CanonicalMap>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n_qubits];
  if (!slot) slot = std::make_unique<CanonicalMap>(universal_frame(n_qubits));
  return *slot;
}

RVector canonical_qp(const DensityMatrix& rho, const ProjectorFrame& frame) {
  if (frame.dim() != rho.dim()) throw InvalidInput("canonical_qp: frame does not match the state");
  if (frame.n_qubits() == 2 || frame.n_qubits() == 3) return canonical_map(frame.n_qubits()).qp(rho);
  return CanonicalMap(frame).qp(rho);
}

Reconstruction reconstruct_from_operator(CMatrix m) {
  m = 0.5 * (m + m.adjoint()).eval();
  const double tr = m.trace().real();
  if (!std::isfinite(tr)) throw NumericalFailure("reconstruct: non-finite operator");
  bool renorm = false;
  if (std::abs(tr - 1.0) > 1e-8) {
    if (!(std::abs(tr) > 1e-12)) throw NumericalFailure("reconstruct: operator has zero trace");
    m /= tr;
    renorm = true;
  }
  const double lmin = min_eigenvalue(m);
  if (lmin < kDefaultTolerances.psd) project_to_density(m);
  Reconstruction out{DensityMatrix::from_matrix(std::move(m)), renorm, lmin < -1e-6, tr, lmin};
  return out;
}

Reconstruction reconstruct(std::span<const Atom> atoms, const RVector& coeffs) {
  return reconstruct_from_operator(combine(atoms, coeffs));
}

Reconstruction reconstruct(const QuasiProbability& qp) { return reconstruct(qp.atoms, qp.coeffs); }

Reconstruction reconstruct(std::span<const double> canonical, const ProjectorFrame& frame) {
  if (canonical.size() != frame.size()) throw InvalidInput("reconstruct: coefficient count mismatch");
  if (frame.n_qubits() == 2 || frame.n_qubits() == 3) {
    return reconstruct_from_operator(canonical_map(frame.n_qubits()).combine(canonical));
  }
  return reconstruct_from_operator(CanonicalMap(frame).combine(canonical));
}

}  // namespace eqpnet

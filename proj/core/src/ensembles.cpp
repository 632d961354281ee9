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

#include "eqpnet/ensembles.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "eqpnet/error.hpp"

namespace eqpnet {
namespace {

constexpr double kPsdRejectTol = -1e-9;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw InvalidInput("ensemble spec: bad value for '" + std::string(key) + "': " +
                       std::string(v));
  }
  return out;
}

int auto_resolution(int n_qubits, std::size_t needed) {
  for (int r = 21;; r += 2) {
    if (pauli_family_grid(n_qubits, r).size() >= needed) return r;
    if (r > 401) throw InvalidInput("pauli_family: requested sample count exceeds grid capacity");
  }
}

}  // namespace

std::string_view to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::bures: return "bures";
    case EnsembleKind::haar_noisy: return "haar_noisy";
    case EnsembleKind::werner: return "werner";
    case EnsembleKind::pauli_family: return "pauli_family";
  }
  return "unknown";
}

EnsembleKind parse_ensemble_kind(std::string_view name) {
  if (name == "bures") return EnsembleKind::bures;
  if (name == "haar_noisy") return EnsembleKind::haar_noisy;
  if (name == "werner") return EnsembleKind::werner;
  if (name == "pauli_family") return EnsembleKind::pauli_family;
  throw InvalidInput("unknown ensemble kind '" + std::string(name) + "'");
}

void EnsembleSpec::validate() const {
  qubit_dim(n_qubits);
  if (!(noise_min >= 0.0 && noise_max <= 1.0 && noise_min <= noise_max)) {
    throw InvalidInput("ensemble spec: noise range must satisfy 0 <= min <= max <= 1");
  }
  if (!(werner_sigma > 0.0) || !(werner_eps > 0.0 && werner_eps < 1.0)) {
    throw InvalidInput("ensemble spec: werner sigma must be > 0 and eps in (0, 1)");
  }
  if (kind == EnsembleKind::werner && n_qubits != 2) {
    throw InvalidInput("ensemble spec: werner states are two-qubit states");
  }
  if (grid_resolution != 0 && grid_resolution < 2) {
    throw InvalidInput("ensemble spec: grid resolution must be 0 (auto) or >= 2");
  }
}

std::string EnsembleSpec::to_text() const {
  std::ostringstream os;
  os << "kind = " << to_string(kind) << '\n'
     << "n_qubits = " << n_qubits << '\n'
     << "noise_min = " << format_double(noise_min) << '\n'
     << "noise_max = " << format_double(noise_max) << '\n'
     << "werner_mu = " << format_double(werner_mu) << '\n'
     << "werner_sigma = " << format_double(werner_sigma) << '\n'
     << "werner_eps = " << format_double(werner_eps) << '\n'
     << "grid_resolution = " << grid_resolution << '\n'
     << "seed = " << seed << '\n';
  return os.str();
}

EnsembleSpec parse_ensemble_spec(std::string_view text) {
  EnsembleSpec spec;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidInput("ensemble spec: expected 'key = value', got '" + std::string(line) + "'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view val = trim(line.substr(eq + 1));
    if (key == "kind") spec.kind = parse_ensemble_kind(val);
    else if (key == "n_qubits") spec.n_qubits = parse_number<int>(key, val);
    else if (key == "noise_min") spec.noise_min = parse_number<double>(key, val);
    else if (key == "noise_max") spec.noise_max = parse_number<double>(key, val);
    else if (key == "werner_mu") spec.werner_mu = parse_number<double>(key, val);
    else if (key == "werner_sigma") spec.werner_sigma = parse_number<double>(key, val);
    else if (key == "werner_eps") spec.werner_eps = parse_number<double>(key, val);
    else if (key == "grid_resolution") spec.grid_resolution = parse_number<int>(key, val);
    else if (key == "seed") spec.seed = parse_number<std::uint64_t>(key, val);
    else throw InvalidInput("ensemble spec: unknown key '" + std::string(key) + "'");
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------

CMatrix ginibre(int dim, Rng& rng) {
  if (dim < 1) throw InvalidInput("ginibre: dimension must be >= 1");
  CMatrix g(dim, dim);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index r = 0; r < dim; ++r) {
      const double re = rng.normal();
      const double im = rng.normal();
      g(r, c) = cdouble(re, im);
    }
  return g;
}

CMatrix haar_unitary(int dim, Rng& rng) {
  const CMatrix z = ginibre(dim, rng);
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(dim, dim);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < dim; ++k) {
    const cdouble d = r(k, k);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(k) *= d / mag;
  }
  return q;
}

PureState haar_pure(int n_qubits, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(qubit_dim(n_qubits));
  CVector v(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double re = rng.normal();
    const double im = rng.normal();
    v[i] = cdouble(re, im);
  }
  return PureState::normalized(std::move(v));
}

DensityMatrix bures_state(int n_qubits, Rng& rng) {
  const int d = static_cast<int>(qubit_dim(n_qubits));
  const CMatrix g = ginibre(d, rng);
  const CMatrix u = haar_unitary(d, rng);
  const CMatrix one = CMatrix::Identity(d, d);
  CMatrix m = (one + u.adjoint()) * g * g.adjoint() * (one + u);
  m = 0.5 * (m + m.adjoint()).eval();
  m /= m.trace().real();
  return DensityMatrix::from_matrix(std::move(m));
}

DensityMatrix noisy_mixture(const PureState& psi, double noise) {
  if (!(noise >= 0.0 && noise <= 1.0)) {
    throw InvalidInput("noise fraction must lie in [0, 1], got " + std::to_string(noise));
  }
  const auto d = static_cast<Eigen::Index>(psi.dim());
  const CVector& a = psi.amplitudes();
  CMatrix m = (1.0 - noise) * (a * a.adjoint()) +
              (noise / static_cast<double>(d)) * CMatrix::Identity(d, d);
  m = 0.5 * (m + m.adjoint()).eval();
  m /= m.trace().real();
  return DensityMatrix::from_matrix(std::move(m));
}

DensityMatrix haar_pure_noisy(int n_qubits, double noise, Rng& rng) {
  if (!(noise >= 0.0 && noise <= 1.0)) {
    throw InvalidInput("noise fraction must lie in [0, 1], got " + std::to_string(noise));
  }
  return noisy_mixture(haar_pure(n_qubits, rng), noise);
}

PureState singlet() {
  CVector v = CVector::Zero(4);
  v[1] = 1.0 / std::sqrt(2.0);
  v[2] = -1.0 / std::sqrt(2.0);
  return PureState::normalized(std::move(v));
}

DensityMatrix werner(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidInput("werner: p must lie in [0, 1], got " + std::to_string(p));
  }
  const CVector s = singlet().amplitudes();
  CMatrix m = p * (s * s.adjoint()) + ((1.0 - p) / 4.0) * CMatrix::Identity(4, 4);
  return DensityMatrix::from_matrix(std::move(m));
}

double sample_werner_p(double mu, double sigma, double eps, Rng& rng) {
  if (!(sigma > 0.0)) throw InvalidInput("sample_werner_p: sigma must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("sample_werner_p: eps must lie in (0, 1)");
  const double hi = 1.0 - eps;
  const double accept = normal_cdf((hi - mu) / sigma) - normal_cdf((0.0 - mu) / sigma);
  if (!(accept > 1e-9)) {
    throw InvalidInput("sample_werner_p: truncation interval has negligible probability mass");
  }
  for (;;) {
    const double x = rng.normal(mu, sigma);
    if (x >= 0.0 && x <= hi) return x;
  }
}

bool pauli_family_physical(int n_qubits, double rx, double ry, double rz) {
  return pauli_family(n_qubits, rx, ry, rz).has_value();
}

std::optional<DensityMatrix> pauli_family(int n_qubits, double rx, double ry, double rz) {
  const auto d = static_cast<Eigen::Index>(qubit_dim(n_qubits));
  const std::vector<Pauli> xs(static_cast<std::size_t>(n_qubits), Pauli::X);
  const std::vector<Pauli> ys(static_cast<std::size_t>(n_qubits), Pauli::Y);
  const std::vector<Pauli> zs(static_cast<std::size_t>(n_qubits), Pauli::Z);
  CMatrix m = CMatrix::Identity(d, d) + rz * pauli_string(zs) + rx * pauli_string(xs) +
              ry * pauli_string(ys);
  m /= static_cast<double>(d);
  m = 0.5 * (m + m.adjoint()).eval();
  if (min_eigenvalue(m) < kPsdRejectTol) return std::nullopt;
  Tolerances tol;
  tol.psd = kPsdRejectTol;
  return DensityMatrix::from_matrix(std::move(m), tol);
}

std::vector<PauliPoint> pauli_family_grid(int n_qubits, int resolution) {
  if (resolution < 2) throw InvalidInput("pauli_family_grid: resolution must be >= 2");
  const auto coord = [resolution](int i) {
    return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(resolution - 1);
  };
  std::vector<PauliPoint> out;
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j)
      for (int k = 0; k < resolution; ++k) {
        const PauliPoint p{coord(i), coord(j), coord(k)};
        if (pauli_family_physical(n_qubits, p[0], p[1], p[2])) out.push_back(p);
      }
  return out;
}

// ---------------------------------------------------------------------------

EnsembleSampler::EnsembleSampler(EnsembleSpec spec, std::size_t capacity)
    : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.kind != EnsembleKind::pauli_family) return;
  resolution_ = spec_.grid_resolution != 0 ? spec_.grid_resolution
                                           : auto_resolution(spec_.n_qubits, capacity);
  std::vector<PauliPoint> grid = pauli_family_grid(spec_.n_qubits, resolution_);
  if (capacity > grid.size()) {
    throw InvalidInput("pauli_family: grid resolution " + std::to_string(resolution_) +
                       " has only " + std::to_string(grid.size()) +
                       " physical points, requested " + std::to_string(capacity));
  }
  // Partial Fisher-Yates: uniform selection without replacement.
  Rng rng = Rng::substream(spec_.seed, ~std::uint64_t{0});
  for (std::size_t i = 0; i < capacity; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(grid.size() - i));
    std::swap(grid[i], grid[j]);
  }
  grid.resize(capacity);
  selection_ = std::move(grid);
}

GeneratedState EnsembleSampler::draw(std::uint64_t index) const {
  Rng rng = Rng::substream(spec_.seed, index);
  switch (spec_.kind) {
    case EnsembleKind::bures: {
      DensityMatrix rho = bures_state(spec_.n_qubits, rng);
      return {spec_.kind, rho, rho, {}};
    }
    case EnsembleKind::haar_noisy: {
      const PureState psi = haar_pure(spec_.n_qubits, rng);
      const double noise = rng.uniform(spec_.noise_min, spec_.noise_max);
      return {spec_.kind, noisy_mixture(psi, noise), density_from_pure(psi), {noise}};
    }
    case EnsembleKind::werner: {
      const double p = sample_werner_p(spec_.werner_mu, spec_.werner_sigma, spec_.werner_eps, rng);
      DensityMatrix rho = werner(p);
      return {spec_.kind, rho, rho, {p}};
    }
    case EnsembleKind::pauli_family: {
      if (index >= selection_.size()) {
        throw InvalidInput("pauli_family: sample index beyond the selected grid points");
      }
      const PauliPoint& pt = selection_[static_cast<std::size_t>(index)];
      DensityMatrix rho = *pauli_family(spec_.n_qubits, pt[0], pt[1], pt[2]);
      return {spec_.kind, rho, rho, {pt[0], pt[1], pt[2]}};
    }
  }
  throw InvalidInput("unknown ensemble kind");
}

}  // namespace eqpnet

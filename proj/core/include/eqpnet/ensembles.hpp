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

#ifndef EQPNET_ENSEMBLES_HPP
#define EQPNET_ENSEMBLES_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eqpnet/qcore.hpp"
#include "eqpnet/rng.hpp"

namespace eqpnet {

enum class EnsembleKind { bures, haar_noisy, werner, pauli_family };

std::string_view to_string(EnsembleKind kind);
EnsembleKind parse_ensemble_kind(std::string_view name);

// Generator description. The seed together with a sample index fully
// determines every generated state.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::bures;
  int n_qubits = 2;
  // haar_noisy: white-noise fraction drawn uniformly from [noise_min, noise_max].
  double noise_min = 0.0;
  double noise_max = 0.5;
  // werner: p ~ N(mu, sigma^2) truncated to [0, 1 - eps].
  double werner_mu = 0.5;
  double werner_sigma = 0.25;
  double werner_eps = 1e-3;
  // pauli_family: grid points per axis on [-1, 1]; 0 selects the smallest
  // odd resolution >= 21 with enough physical points for the request.
  int grid_resolution = 21;
  std::uint64_t seed = 0;

  void validate() const;
  // `key = value` lines; parse_ensemble_spec inverts to_text exactly.
  std::string to_text() const;
};

EnsembleSpec parse_ensemble_spec(std::string_view text);

// One generated sample: the state, the ideal reference state of its generator
// (the noiseless pure state for haar_noisy, the state itself otherwise) and
// the generator parameters that produced it.
struct GeneratedState {
  EnsembleKind kind;
  DensityMatrix rho;
  DensityMatrix reference;
  std::vector<double> params;
};

CMatrix ginibre(int dim, Rng& rng);
// Haar unitary from the QR factorization of a Ginibre matrix with the phases
// of diag(R) absorbed into Q.
CMatrix haar_unitary(int dim, Rng& rng);
PureState haar_pure(int n_qubits, Rng& rng);

DensityMatrix bures_state(int n_qubits, Rng& rng);
DensityMatrix haar_pure_noisy(int n_qubits, double noise, Rng& rng);
// (1 - noise)|psi><psi| + noise I / 2^N
DensityMatrix noisy_mixture(const PureState& psi, double noise);

// p |psi-><psi-| + (1 - p) I/4 with |psi-> = (|01> - |10>)/sqrt(2).
DensityMatrix werner(double p);
PureState singlet();

double sample_werner_p(double mu, double sigma, double eps, Rng& rng);

// (I + rz Z..Z + rx X..X + ry Y..Y) / 2^N, or nullopt when not PSD.
std::optional<DensityMatrix> pauli_family(int n_qubits, double rx, double ry, double rz);
bool pauli_family_physical(int n_qubits, double rx, double ry, double rz);

using PauliPoint = std::array<double, 3>;  // (rx, ry, rz)

// Physical points of the regular grid on [-1, 1]^3, lexicographic in
// (rx, ry, rz) grid index.
std::vector<PauliPoint> pauli_family_grid(int n_qubits, int resolution);

// Draws samples of one ensemble. Construction precomputes the grid for
// pauli_family; draw() is a pure function of (spec, index).
class EnsembleSampler {
 public:
  // `capacity` is the number of distinct indices that will be requested;
  // only pauli_family uses it (selection without replacement).
  EnsembleSampler(EnsembleSpec spec, std::size_t capacity);

  const EnsembleSpec& spec() const noexcept { return spec_; }
  int grid_resolution() const noexcept { return resolution_; }
  GeneratedState draw(std::uint64_t index) const;

 private:
  EnsembleSpec spec_;
  int resolution_ = 0;
  std::vector<PauliPoint> selection_;
};

}  // namespace eqpnet

#endif  // EQPNET_ENSEMBLES_HPP

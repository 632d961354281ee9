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

#ifndef EQPNET_MEASUREMENT_HPP
#define EQPNET_MEASUREMENT_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqpnet/qcore.hpp"
#include "eqpnet/rng.hpp"

namespace eqpnet {

// Single-qubit eigenstates in frame order.
enum class LocalState : std::uint8_t { Zp = 0, Zm = 1, Xp = 2, Xm = 3, Yp = 4, Ym = 5 };

inline constexpr int kLocalStates = 6;

CVector local_state_vector(LocalState s);
const char* local_state_name(LocalState s);

// One rank-1 product projector of the frame.
struct FrameAtom {
  std::vector<LocalState> locals;  // one per qubit, qubit 0 first
  CVector vector;                  // product state
  CMatrix projector;               // |v><v|
  std::string label() const;       // e.g. "Z+X-"
};

// The 6^N product projectors built from the X, Y and Z eigenbases, ordered
// lexicographically by per-qubit local index with qubit 0 most significant.
class ProjectorFrame {
 public:
  explicit ProjectorFrame(int n_qubits);

  int n_qubits() const noexcept { return n_qubits_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  std::size_t dim() const noexcept { return std::size_t{1} << n_qubits_; }
  const FrameAtom& atom(std::size_t i) const { return atoms_.at(i); }
  const std::vector<FrameAtom>& atoms() const noexcept { return atoms_; }

  // Index of the measurement setting (per-qubit axis choice) of atom i; atoms
  // sharing a setting form one orthonormal product basis.
  std::size_t setting_of(std::size_t i) const;

 private:
  int n_qubits_;
  std::vector<FrameAtom> atoms_;
};

// Universal frame for N in {2, 3}.
ProjectorFrame universal_frame(int n_qubits);

// Strictly nested subsets S_0 c S_1 c ... of a frame. S_k consists of the
// first sizes[k] entries of a single random ordering of the frame indices.
class SubsetChain {
 public:
  SubsetChain(std::size_t frame_size, std::vector<std::size_t> sizes,
              std::vector<std::size_t> order);

  std::size_t frame_size() const noexcept { return frame_size_; }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  const std::vector<std::size_t>& order() const noexcept { return order_; }
  std::size_t levels() const noexcept { return sizes_.size(); }
  std::span<const std::size_t> subset(std::size_t level) const;
  // Level whose subset has exactly `size` elements.
  std::size_t level_of_size(std::size_t size) const;

 private:
  std::size_t frame_size_;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> order_;  // length sizes.back()
};

SubsetChain nested_chain(const ProjectorFrame& frame, std::vector<std::size_t> sizes, Rng& rng);

// (2, 4, ..., 36) for two qubits; (30, 60, ..., 180, 216) for three.
std::vector<std::size_t> default_chain_sizes(int n_qubits);

struct MeasurementRecord {
  std::vector<std::size_t> indices;  // frame indices
  std::vector<double> values;        // Born probabilities or relative frequencies
  std::optional<std::uint64_t> shots;  // nullopt means exact probabilities

  std::size_t size() const noexcept { return indices.size(); }
  void validate(const ProjectorFrame& frame) const;
};

std::vector<double> born_probs(const CMatrix& rho, const ProjectorFrame& frame,
                               std::span<const std::size_t> subset);
std::vector<double> born_probs(const DensityMatrix& rho, const ProjectorFrame& frame,
                               std::span<const std::size_t> subset);
std::vector<double> born_probs(const DensityMatrix& rho, const ProjectorFrame& frame);

// Per-projector binomial shot noise: k_j ~ Binomial(shots, p_j).
MeasurementRecord simulate_counts(std::span<const std::size_t> indices,
                                  std::span<const double> probs, std::uint64_t shots, Rng& rng);

// Per-setting multinomial shot noise: every measurement setting touched by
// `indices` is sampled once with `shots` trials over its 2^N outcomes.
MeasurementRecord simulate_counts_multinomial(const DensityMatrix& rho,
                                              const ProjectorFrame& frame,
                                              std::span<const std::size_t> indices,
                                              std::uint64_t shots, Rng& rng);

MeasurementRecord exact_record(const DensityMatrix& rho, const ProjectorFrame& frame,
                               std::span<const std::size_t> indices);

// [values scattered to frame positions | 0/1 measured mask], length 2 |frame|.
std::vector<double> encode_input(const MeasurementRecord& record, const ProjectorFrame& frame);

}  // namespace eqpnet

#endif  // EQPNET_MEASUREMENT_HPP

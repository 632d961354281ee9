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

#include "eqpnet/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "eqpnet/error.hpp"

namespace eqpnet {

CVector local_state_vector(LocalState s) {
  const double r = 1.0 / std::sqrt(2.0);
  const cdouble i(0.0, 1.0);
  CVector v(2);
  switch (s) {
    case LocalState::Zp: v << 1.0, 0.0; break;
    case LocalState::Zm: v << 0.0, 1.0; break;
    case LocalState::Xp: v << r, r; break;
    case LocalState::Xm: v << r, -r; break;
    case LocalState::Yp: v << r, r * i; break;
    case LocalState::Ym: v << r, -r * i; break;
  }
  return v;
}

const char* local_state_name(LocalState s) {
  static constexpr const char* kNames[] = {"Z+", "Z-", "X+", "X-", "Y+", "Y-"};
  return kNames[static_cast<int>(s)];
}

std::string FrameAtom::label() const {
  std::string out;
  for (LocalState s : locals) out += local_state_name(s);
  return out;
}

ProjectorFrame::ProjectorFrame(int n_qubits) : n_qubits_(n_qubits) {
  qubit_dim(n_qubits);
  std::size_t count = 1;
  for (int k = 0; k < n_qubits; ++k) count *= kLocalStates;
  atoms_.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    FrameAtom atom;
    atom.locals.resize(static_cast<std::size_t>(n_qubits));
    std::size_t rest = idx;
    for (int k = n_qubits - 1; k >= 0; --k) {
      atom.locals[static_cast<std::size_t>(k)] = static_cast<LocalState>(rest % kLocalStates);
      rest /= kLocalStates;
    }
    std::vector<CVector> factors;
    for (LocalState s : atom.locals) factors.push_back(local_state_vector(s));
    atom.vector = kron_all(factors);
    atom.projector = atom.vector * atom.vector.adjoint();
    atoms_.push_back(std::move(atom));
  }
}

std::size_t ProjectorFrame::setting_of(std::size_t i) const {
  std::size_t setting = 0;
  for (LocalState s : atoms_.at(i).locals) setting = setting * 3 + static_cast<std::size_t>(s) / 2;
  return setting;
}

ProjectorFrame universal_frame(int n_qubits) {
  if (n_qubits != 2 && n_qubits != 3) {
    throw InvalidInput("universal_frame supports 2 or 3 qubits, got " + std::to_string(n_qubits));
  }
  return ProjectorFrame(n_qubits);
}

// ---------------------------------------------------------------------------

SubsetChain::SubsetChain(std::size_t frame_size, std::vector<std::size_t> sizes,
                         std::vector<std::size_t> order)
    : frame_size_(frame_size), sizes_(std::move(sizes)), order_(std::move(order)) {
  if (sizes_.empty()) throw InvalidInput("subset chain needs at least one size");
  for (std::size_t k = 0; k < sizes_.size(); ++k) {
    if (sizes_[k] == 0 || (k > 0 && sizes_[k] <= sizes_[k - 1])) {
      throw InvalidInput("subset chain sizes must be positive and strictly increasing");
    }
  }
  if (sizes_.back() > frame_size_) throw InvalidInput("subset chain larger than the frame");
  if (order_.size() != sizes_.back()) throw InvalidInput("subset chain ordering has wrong length");
  std::vector<bool> seen(frame_size_, false);
  for (std::size_t i : order_) {
    if (i >= frame_size_ || seen[i]) throw InvalidInput("subset chain has invalid or repeated index");
    seen[i] = true;
  }
}

std::span<const std::size_t> SubsetChain::subset(std::size_t level) const {
  return std::span<const std::size_t>(order_).first(sizes_.at(level));
}

std::size_t SubsetChain::level_of_size(std::size_t size) const {
  const auto it = std::find(sizes_.begin(), sizes_.end(), size);
  if (it == sizes_.end()) throw InvalidInput("no chain level of size " + std::to_string(size));
  return static_cast<std::size_t>(it - sizes_.begin());
}

SubsetChain nested_chain(const ProjectorFrame& frame, std::vector<std::size_t> sizes, Rng& rng) {
  if (sizes.empty() || sizes.back() > frame.size()) {
    throw InvalidInput("nested_chain: sizes must be nonempty and fit the frame");
  }
  // Sequential uniform draws without replacement from the remaining pool.
  std::vector<std::size_t> pool(frame.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  const std::size_t total = sizes.back();
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(total);
  return SubsetChain(frame.size(), std::move(sizes), std::move(pool));
}

std::vector<std::size_t> default_chain_sizes(int n_qubits) {
  if (n_qubits == 2) {
    std::vector<std::size_t> s;
    for (std::size_t k = 2; k <= 36; k += 2) s.push_back(k);
    return s;
  }
  if (n_qubits == 3) return {30, 60, 90, 120, 150, 180, 216};
  throw InvalidInput("default chain sizes exist for 2 or 3 qubits only");
}

// ---------------------------------------------------------------------------

void MeasurementRecord::validate(const ProjectorFrame& frame) const {
  if (indices.size() != values.size()) {
    throw InvalidInput("measurement record: index and value counts differ");
  }
  std::vector<bool> seen(frame.size(), false);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= frame.size() || seen[indices[k]]) {
      throw InvalidInput("measurement record: invalid or duplicate projector index");
    }
    seen[indices[k]] = true;
    if (!(values[k] >= 0.0 && values[k] <= 1.0)) {
      throw InvalidInput("measurement record: value outside [0, 1]");
    }
  }
  if (!shots) return;
  if (*shots == 0) throw InvalidInput("measurement record: zero shots");
  const auto n = static_cast<double>(*shots);
  for (double v : values) {
    if (std::abs(v * n - std::round(v * n)) > 1e-6) {
      throw InvalidInput("measurement record: frequency is not a multiple of 1/shots");
    }
  }
}

std::vector<double> born_probs(const CMatrix& rho, const ProjectorFrame& frame,
                               std::span<const std::size_t> subset) {
  if (static_cast<std::size_t>(rho.rows()) != frame.dim()) {
    throw InvalidInput("born_probs: state dimension does not match the frame");
  }
  std::vector<double> out;
  out.reserve(subset.size());
  for (std::size_t j : subset) {
    if (j >= frame.size()) throw InvalidInput("born_probs: projector index out of range");
    const CVector& v = frame.atom(j).vector;
    const double p = v.dot(rho * v).real();
    out.push_back(std::clamp(p, 0.0, 1.0));
  }
  return out;
}

std::vector<double> born_probs(const DensityMatrix& rho, const ProjectorFrame& frame,
                               std::span<const std::size_t> subset) {
  return born_probs(rho.matrix(), frame, subset);
}

std::vector<double> born_probs(const DensityMatrix& rho, const ProjectorFrame& frame) {
  std::vector<std::size_t> all(frame.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return born_probs(rho, frame, all);
}

namespace {

std::uint64_t draw_binomial(std::uint64_t n, double p, Rng& rng) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<std::uint64_t> dist(n, p);
  return dist(rng);
}

}  // namespace

MeasurementRecord simulate_counts(std::span<const std::size_t> indices,
                                  std::span<const double> probs, std::uint64_t shots, Rng& rng) {
  if (shots < 1) throw InvalidInput("simulate_counts: shots must be >= 1");
  if (indices.size() != probs.size()) throw InvalidInput("simulate_counts: size mismatch");
  MeasurementRecord rec;
  rec.indices.assign(indices.begin(), indices.end());
  rec.shots = shots;
  rec.values.reserve(probs.size());
  for (double p : probs) {
    const std::uint64_t k = draw_binomial(shots, std::clamp(p, 0.0, 1.0), rng);
    rec.values.push_back(static_cast<double>(k) / static_cast<double>(shots));
  }
  return rec;
}

MeasurementRecord simulate_counts_multinomial(const DensityMatrix& rho,
                                              const ProjectorFrame& frame,
                                              std::span<const std::size_t> indices,
                                              std::uint64_t shots, Rng& rng) {
  if (shots < 1) throw InvalidInput("simulate_counts_multinomial: shots must be >= 1");
  // Counts of every outcome of each touched setting, drawn by conditional binomials.
  std::map<std::size_t, std::map<std::size_t, std::uint64_t>> counts;
  for (std::size_t j : indices) {
    const std::size_t setting = frame.setting_of(j);
    if (counts.contains(setting)) continue;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < frame.size(); ++i)
      if (frame.setting_of(i) == setting) members.push_back(i);
    const std::vector<double> p = born_probs(rho, frame, members);
    std::uint64_t remaining = shots;
    double mass = 1.0;
    auto& slot = counts[setting];
    for (std::size_t m = 0; m < members.size(); ++m) {
      std::uint64_t k = remaining;
      if (m + 1 < members.size()) {
        k = mass > 0.0 ? draw_binomial(remaining, std::clamp(p[m] / mass, 0.0, 1.0), rng) : 0;
      }
      slot[members[m]] = k;
      remaining -= k;
      mass -= p[m];
    }
  }
  MeasurementRecord rec;
  rec.indices.assign(indices.begin(), indices.end());
  rec.shots = shots;
  for (std::size_t j : indices) {
    rec.values.push_back(static_cast<double>(counts[frame.setting_of(j)][j]) /
                         static_cast<double>(shots));
  }
  return rec;
}

MeasurementRecord exact_record(const DensityMatrix& rho, const ProjectorFrame& frame,
                               std::span<const std::size_t> indices) {
  MeasurementRecord rec;
  rec.indices.assign(indices.begin(), indices.end());
  rec.values = born_probs(rho, frame, indices);
  return rec;
}

std::vector<double> encode_input(const MeasurementRecord& record, const ProjectorFrame& frame) {
  const std::size_t n = frame.size();
  std::vector<double> x(2 * n, 0.0);
  for (std::size_t k = 0; k < record.indices.size(); ++k) {
    const std::size_t j = record.indices[k];
    if (j >= n) throw InvalidInput("encode_input: projector index out of range");
    x[j] = record.values.at(k);
    x[n + j] = 1.0;
  }
  return x;
}

}  // namespace eqpnet

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

#include "eqpnet/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "eqpnet/error.hpp"

namespace eqpnet {
namespace {

// Unconstrained least squares restricted to the passive columns.
RVector passive_solve(const RMatrix& a, const RVector& b, const std::vector<bool>& passive) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
  RMatrix ap(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
  const RVector zp = ap.colPivHouseholderQr().solve(b);
  RVector z = RVector::Zero(a.cols());
  for (std::size_t k = 0; k < cols.size(); ++k) z[cols[k]] = zp[static_cast<Eigen::Index>(k)];
  return z;
}

}  // namespace

NnlsResult nnls(const RMatrix& a, const RVector& b, int max_iter) {
  if (a.rows() != b.size()) throw InvalidInput("nnls: row count does not match rhs");
  const Eigen::Index n = a.cols();
  NnlsResult res;
  res.x = RVector::Zero(n);
  if (n == 0) {
    res.residual_norm = b.norm();
    return res;
  }
  if (max_iter <= 0) max_iter = static_cast<int>(10 * n) + 100;

  const double tol = 10.0 * std::numeric_limits<double>::epsilon() *
                     std::max<double>(1.0, a.norm()) * static_cast<double>(std::max(a.rows(), n)) *
                     std::max(1.0, b.norm());
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  std::vector<bool> blocked(static_cast<std::size_t>(n), false);
  RVector& x = res.x;

  for (;;) {
    const RVector w = a.transpose() * (b - a * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      if (!passive[uj] && !blocked[uj] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) break;
    if (++res.iterations > max_iter) throw SolverFailure("nnls: iteration cap reached");
    passive[static_cast<std::size_t>(best)] = true;

    RVector z = passive_solve(a, b, passive);
    // The entering column may be numerically dependent on the passive set;
    // a non-positive entering weight means no progress along it, so it is
    // skipped until the iterate changes.
    if (z[best] <= 0.0) {
      passive[static_cast<std::size_t>(best)] = false;
      blocked[static_cast<std::size_t>(best)] = true;
      continue;
    }
    std::fill(blocked.begin(), blocked.end(), false);
    for (int inner = 0;; ++inner) {
      if (inner > max_iter) throw SolverFailure("nnls: inner loop did not terminate");
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && z[j] <= 0.0) feasible = false;
      if (feasible) break;
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z[j] <= 0.0) {
          alpha = std::min(alpha, x[j] / (x[j] - z[j]));
        }
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x[j] <= tol * 1e-3) {
          passive[static_cast<std::size_t>(j)] = false;
          x[j] = 0.0;
        }
      }
      z = passive_solve(a, b, passive);
    }
    x = z;
  }
  res.residual_norm = (a * x - b).norm();
  return res;
}

}  // namespace eqpnet

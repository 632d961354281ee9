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

#ifndef EQPNET_NNLS_HPP
#define EQPNET_NNLS_HPP

#include "eqpnet/qcore.hpp"

namespace eqpnet {

struct NnlsResult {
  RVector x;
  double residual_norm = 0.0;  // ||A x - b||
  int iterations = 0;
};

// Lawson-Hanson active-set solver for min ||A x - b|| subject to x >= 0.
// Throws SolverFailure when the outer loop exceeds `max_iter` (default 10n + 100).
NnlsResult nnls(const RMatrix& a, const RVector& b, int max_iter = 0);

}  // namespace eqpnet

#endif  // EQPNET_NNLS_HPP

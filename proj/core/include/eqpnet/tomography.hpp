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

#ifndef EQPNET_TOMOGRAPHY_HPP
#define EQPNET_TOMOGRAPHY_HPP

#include <string_view>
#include <vector>

#include "eqpnet/measurement.hpp"
#include "eqpnet/qcore.hpp"

namespace eqpnet {

struct TomoOptions {
  int max_iter = 5000;
  double conv_tol = 1e-10;      // HS-norm change per accepted iteration
  double dilution = 0.01;       // maxlik: R_eps = (1 - eps) R + eps I
  double entropy_weight = 1e-3; // mlme: lambda
  double step = 0.1;            // mlme: eta
  double prob_floor = 1e-12;
  bool keep_history = false;

  void validate() const;
};

enum class TomoMethod { maxlik, mlme };
std::string_view to_string(TomoMethod m);
TomoMethod parse_tomo_method(std::string_view name);

struct TomoResult {
  DensityMatrix rho;
  int iterations = 0;
  int rejected_steps = 0;
  double objective = 0.0;
  bool converged = false;
  std::vector<double> history;  // objective after each accepted step
};

// sum_j f_j log max(Tr(rho Pi_j), floor)
double log_likelihood(const CMatrix& rho, const MeasurementRecord& record,
                      const ProjectorFrame& frame, double prob_floor = 1e-12);

// Diluted R rho R iteration over the measured projectors. R is normalized by
// sum_j f_j; steps that lower the likelihood are rejected and retried with
// stronger dilution.
TomoResult maxlik(const MeasurementRecord& record, const ProjectorFrame& frame,
                  const TomoOptions& opts = {});

// Matrix-exponentiated gradient ascent on log L + lambda S with step halving.
TomoResult mlme(const MeasurementRecord& record, const ProjectorFrame& frame,
                const TomoOptions& opts = {});

TomoResult reconstruct_state(TomoMethod method, const MeasurementRecord& record,
                             const ProjectorFrame& frame, const TomoOptions& opts = {});

}  // namespace eqpnet

#endif  // EQPNET_TOMOGRAPHY_HPP

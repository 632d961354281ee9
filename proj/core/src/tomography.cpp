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

#include "eqpnet/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eqpnet/error.hpp"

namespace eqpnet {
namespace {

constexpr int kMaxConsecutiveRejections = 40;
// Objective decrease tolerated on an accepted step (rounding noise).
constexpr double kMonotoneSlack = 1e-12;

// Measured projectors in Hermitian coordinates: p = P x(rho), R = sum w_j Pi_j
// has coordinates P^T w.
struct Measured {
  RMatrix coords;  // one row per measured projector
  RVector freqs;
  double total = 0.0;
  Eigen::Index dim = 0;
};

Measured gather(const MeasurementRecord& record, const ProjectorFrame& frame) {
  record.validate(frame);
  Measured m;
  m.dim = static_cast<Eigen::Index>(frame.dim());
  const auto n = static_cast<Eigen::Index>(record.indices.size());
  m.coords.resize(n, m.dim * m.dim);
  m.freqs.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    m.coords.row(k) = hermitian_coordinates(frame.atom(record.indices[idx]).projector).transpose();
    m.freqs[k] = record.values[idx];
    m.total += record.values[idx];
  }
  return m;
}

RVector probabilities(const CMatrix& rho, const Measured& m, double floor) {
  RVector p = m.coords * hermitian_coordinates(rho);
  return p.cwiseMax(floor);
}

double loglik(const RVector& p, const Measured& m) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < m.freqs.size(); ++k)
    if (m.freqs[k] != 0.0) s += m.freqs[k] * std::log(p[k]);
  return s;
}

double loglik(const CMatrix& rho, const Measured& m, double floor) {
  return loglik(probabilities(rho, m, floor), m);
}

// sum_j f_j / p_j Pi_j
CMatrix r_operator(const RVector& p, const Measured& m) {
  const RVector w = m.freqs.cwiseQuotient(p);
  return from_hermitian_coordinates(m.coords.transpose() * w, m.dim);
}

void hermitize(CMatrix& m) { m = 0.5 * (m + m.adjoint()).eval(); }

DensityMatrix finalize(CMatrix m) {
  hermitize(m);
  m /= m.trace().real();
  if (min_eigenvalue(m) < kDefaultTolerances.psd) project_to_density(m);
  return DensityMatrix::from_matrix(std::move(m));
}

}  // namespace

void TomoOptions::validate() const {
  if (max_iter < 1) throw InvalidInput("tomography: max_iter must be >= 1");
  if (!(conv_tol > 0.0)) throw InvalidInput("tomography: conv_tol must be positive");
  if (!(dilution >= 0.0 && dilution <= 1.0)) throw InvalidInput("tomography: dilution must lie in [0, 1]");
  if (!(entropy_weight >= 0.0)) throw InvalidInput("tomography: entropy weight must be >= 0");
  if (!(step > 0.0)) throw InvalidInput("tomography: step must be positive");
  if (!(prob_floor > 0.0)) throw InvalidInput("tomography: probability floor must be positive");
}

std::string_view to_string(TomoMethod m) { return m == TomoMethod::maxlik ? "maxlik" : "mlme"; }

TomoMethod parse_tomo_method(std::string_view name) {
  if (name == "maxlik") return TomoMethod::maxlik;
  if (name == "mlme") return TomoMethod::mlme;
  throw InvalidInput("unknown tomography method '" + std::string(name) + "'");
}

double log_likelihood(const CMatrix& rho, const MeasurementRecord& record,
                      const ProjectorFrame& frame, double prob_floor) {
  return loglik(rho, gather(record, frame), prob_floor);
}

TomoResult maxlik(const MeasurementRecord& record, const ProjectorFrame& frame,
                  const TomoOptions& opts) {
  opts.validate();
  const Measured meas = gather(record, frame);
  const auto d = static_cast<Eigen::Index>(frame.dim());
  const CMatrix id = CMatrix::Identity(d, d);
  CMatrix rho = id / static_cast<double>(d);
  double obj = loglik(rho, meas, opts.prob_floor);

  TomoResult out{DensityMatrix::maximally_mixed(frame.n_qubits()), 0, 0, 0.0, false, {}};
  if (meas.total <= 0.0) {
    out.converged = true;
    out.objective = obj;
    return out;
  }
  double eps = opts.dilution;
  int consecutive_rejects = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    ++out.iterations;
    const CMatrix r = r_operator(probabilities(rho, meas, opts.prob_floor), meas) / meas.total;
    const CMatrix re = (1.0 - eps) * r + eps * id;
    CMatrix cand = re * rho * re;
    hermitize(cand);
    cand /= cand.trace().real();
    const double cand_obj = loglik(cand, meas, opts.prob_floor);
    if (!std::isfinite(cand_obj)) throw NumericalFailure("maxlik: non-finite likelihood");
    if (cand_obj < obj - kMonotoneSlack) {
      ++out.rejected_steps;
      if (++consecutive_rejects > kMaxConsecutiveRejections) break;
      eps = eps + 0.5 * (1.0 - eps);
      continue;
    }
    consecutive_rejects = 0;
    const double change = (cand - rho).norm();
    rho = std::move(cand);
    obj = cand_obj;
    if (opts.keep_history) out.history.push_back(obj);
    if (change <= opts.conv_tol && eps == opts.dilution) {
      out.converged = true;
      break;
    }
    eps = std::max(opts.dilution, 0.5 * eps);
  }
  out.rho = finalize(rho);
  out.objective = obj;
  return out;
}

TomoResult mlme(const MeasurementRecord& record, const ProjectorFrame& frame,
                const TomoOptions& opts) {
  opts.validate();
  const Measured meas = gather(record, frame);
  const auto d = static_cast<Eigen::Index>(frame.dim());
  const double floor = opts.prob_floor;
  const double lambda = opts.entropy_weight;

  const auto entropy_of = [](const EigenSystem& es) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.values.size(); ++i)
      if (es.values[i] > 0.0) s -= es.values[i] * std::log(es.values[i]);
    return s;
  };
  const auto log_of = [floor](const EigenSystem& es) {
    return apply_spectral(es, [floor](double x) { return std::log(std::max(x, floor)); });
  };

  CMatrix rho = CMatrix::Identity(d, d) / static_cast<double>(d);
  EigenSystem es = hermitian_eig(rho);
  double obj = loglik(rho, meas, floor) + lambda * entropy_of(es);

  TomoResult out{DensityMatrix::maximally_mixed(frame.n_qubits()), 0, 0, 0.0, false, {}};
  double eta = opts.step;
  int consecutive_rejects = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    ++out.iterations;
    const CMatrix log_rho = log_of(es);
    // Gradient of log L + lambda S; the -lambda I term cancels on normalization.
    const CMatrix grad = r_operator(probabilities(rho, meas, floor), meas) - lambda * log_rho;
    CMatrix expo = log_rho + eta * grad;
    hermitize(expo);
    EigenSystem ces = hermitian_eig(expo);
    const double shift = ces.values.maxCoeff();
    for (Eigen::Index i = 0; i < ces.values.size(); ++i) ces.values[i] = std::exp(ces.values[i] - shift);
    ces.values /= ces.values.sum();
    CMatrix cand = ces.vectors * ces.values.asDiagonal() * ces.vectors.adjoint();
    hermitize(cand);
    const double cand_obj = loglik(cand, meas, floor) + lambda * entropy_of(ces);
    if (!std::isfinite(cand_obj)) throw NumericalFailure("mlme: non-finite objective");
    if (cand_obj < obj - kMonotoneSlack) {
      ++out.rejected_steps;
      if (++consecutive_rejects > kMaxConsecutiveRejections) break;
      eta *= 0.5;
      continue;
    }
    consecutive_rejects = 0;
    const double change = (cand - rho).norm();
    rho = std::move(cand);
    es = std::move(ces);
    obj = cand_obj;
    if (opts.keep_history) out.history.push_back(obj);
    if (change <= opts.conv_tol) {
      out.converged = true;
      break;
    }
    eta = std::min(opts.step, 2.0 * eta);
  }
  out.rho = finalize(rho);
  out.objective = obj;
  return out;
}

TomoResult reconstruct_state(TomoMethod method, const MeasurementRecord& record,
                             const ProjectorFrame& frame, const TomoOptions& opts) {
  return method == TomoMethod::maxlik ? maxlik(record, frame, opts) : mlme(record, frame, opts);
}

}  // namespace eqpnet

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

#ifndef EQPNET_BENCH_HPP
#define EQPNET_BENCH_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqpnet/ensembles.hpp"
#include "eqpnet/measurement.hpp"
#include "eqpnet/neuralnet.hpp"
#include "eqpnet/qcore.hpp"
#include "eqpnet/tomography.hpp"

namespace eqpnet {

double rmse(std::span<const double> x, std::span<const double> y);

struct Labels {
  double negativity = 0.0;
  std::optional<bool> entangled;  // PPT verdict, two qubits only
  double reference_fidelity = 1.0;
  double purity = 1.0;
};

Labels compute_labels(const DensityMatrix& rho, const DensityMatrix& reference,
                      std::span<const double> target);

struct DatasetRecord {
  std::uint64_t id = 0;
  EnsembleKind kind = EnsembleKind::bures;
  std::vector<double> params;  // generator parameters (noise, p, r...)
  std::uint64_t seed = 0;      // dataset seed the record was drawn under
  DensityMatrix rho = DensityMatrix::maximally_mixed(2);
  DensityMatrix reference = DensityMatrix::maximally_mixed(2);
  int level = -1;              // chain level of the measurement, -1 = full frame
  MeasurementRecord measurement;
  std::vector<double> target;  // canonical EQP of rho
  Labels labels;
};

DatasetRecord make_record(std::uint64_t id, std::uint64_t seed, const GeneratedState& state,
                          const ProjectorFrame& frame, int level,
                          std::span<const std::size_t> indices, std::uint64_t shots, Rng& rng);

// Two-qubit corpora mix Bures and noisy Haar states; three-qubit corpora
// subsample the Pauli-diagonal family on a grid.
enum class DatasetFamily { bures_mixture, pauli_family };
std::string_view to_string(DatasetFamily f);
DatasetFamily parse_dataset_family(std::string_view name);

struct DatasetOptions {
  int n_qubits = 2;
  DatasetFamily family = DatasetFamily::bures_mixture;
  int grid_resolution = 0;          // pauli_family only, 0 = auto
  std::size_t pool_count = 30000;   // training + validation states
  std::size_t test_count = 0;       // 0 = scaled from the reference protocol
  double bures_fraction = 0.8;
  double noise_min = 0.0;
  double noise_max = 0.5;
  double train_fraction = 0.8;      // 4:1 train:validation
  std::uint64_t shots = 0;          // 0 = exact probabilities
  std::uint64_t seed = 1;
  std::vector<std::size_t> chain_sizes;  // empty = default_chain_sizes
  std::vector<std::size_t> train_levels; // empty = every chain level

  static DatasetOptions desk(int n_qubits);
  void validate() const;
  std::size_t effective_test_count() const;
};

// Reference test-set size rescaled to a smaller training pool.
std::size_t scaled_test_count(int n_qubits, std::size_t pool_count);

struct Dataset {
  DatasetOptions options;
  SubsetChain chain;
  std::vector<DatasetRecord> train, validation, test;
};

// The nested chain a dataset seed selects.
SubsetChain make_chain(int n_qubits, std::vector<std::size_t> sizes, std::uint64_t seed);

Dataset build_dataset(const DatasetOptions& opts);

// Full-frame test records for one ensemble; used for out-of-distribution sets.
std::vector<DatasetRecord> build_test_records(const EnsembleSpec& spec, std::size_t count,
                                              std::uint64_t shots, std::uint64_t first_id = 0);

// Line-oriented persistence: one header line, then one JSON record per line.
struct PartitionHeader {
  std::string partition;
  std::string family = "bures_mixture";
  int n_qubits = 2;
  std::uint64_t seed = 0;
  std::uint64_t shots = 0;
  std::vector<std::size_t> chain_sizes;
  std::vector<std::size_t> chain_order;
  std::size_t count = 0;
};

void write_partition(std::ostream& os, const PartitionHeader& header,
                     std::span<const DatasetRecord> records);
void write_partition(const std::string& path, const PartitionHeader& header,
                     std::span<const DatasetRecord> records);

struct Partition {
  PartitionHeader header;
  std::vector<DatasetRecord> records;
  SubsetChain chain() const;
};

Partition read_partition(std::istream& is, const std::string& source = "<stream>");
Partition read_partition(const std::string& path);

// Writes train.jsonl, validation.jsonl and test.jsonl into `dir`.
void write_dataset(const Dataset& data, const std::string& dir);

TrainingSet to_training_set(std::span<const DatasetRecord> records, const ProjectorFrame& frame);

// Restricts a full-frame record to one chain level.
MeasurementRecord restrict_record(const MeasurementRecord& full, std::span<const std::size_t> subset);

enum class SweepMethod { net, maxlik, mlme };
std::string_view to_string(SweepMethod m);
SweepMethod parse_sweep_method(std::string_view name);

struct SweepOptions {
  TomoOptions tomo;
  double failure_budget = 0.01;
  std::vector<std::size_t> levels;  // empty = all chain levels
};

struct PointResult {
  std::uint64_t id;
  std::size_t size;
  double rmse;
  double fidelity;   // reconstructed state vs the record's reference
  double purity;     // of the reconstructed state
};

struct SizeStats {
  std::size_t size = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation across test states
  std::size_t count = 0;
  std::size_t failures = 0;
};

struct TrendFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

TrendFit fit_line(std::span<const double> x, std::span<const double> y);

// std/mean of the per-size means (population standard deviation).
double coefficient_of_variation(std::span<const double> means);

struct SweepResult {
  std::string method;
  std::vector<SizeStats> sizes;
  TrendFit trend;
  double cov = 0.0;
  std::vector<PointResult> points;
};

SweepResult run_sweep(SweepMethod method, const SubsetChain& chain,
                      std::span<const DatasetRecord> test, const ProjectorFrame& frame,
                      const ResidualModel* model = nullptr, const SweepOptions& opts = {});

// Rebuilds the per-size aggregates and trend from `points`.
void aggregate(SweepResult& result, std::span<const std::size_t> sizes);

struct DownstreamRow {
  std::size_t size = 0;
  double fidelity_rmse = 0.0;
  double purity_rmse = 0.0;
  std::size_t count = 0;
};

std::vector<DownstreamRow> eval_downstream(const SweepResult& sweep,
                                           std::span<const DatasetRecord> test);

MeasurementRecord import_counts(std::istream& is, int n_qubits, const std::string& source = "<stream>");
MeasurementRecord import_counts(const std::string& path, int n_qubits);

// Text density matrices: a "# eqpnet-density <dim>" line, then one line per
// row holding re im pairs.
void write_density(std::ostream& os, const CMatrix& rho);
DensityMatrix read_density(std::istream& is, const std::string& source = "<stream>");

// Counts files: "projector_id,counts,shots" rows (the format import_counts reads).
void write_counts(std::ostream& os, const MeasurementRecord& record, const ProjectorFrame& frame);

// Re-reads the CSV written by write_sweep_csv; trend and CoV are recomputed.
std::vector<SweepResult> read_sweep_csv(std::istream& is, const std::string& source = "<stream>");

void write_sweep_csv(std::ostream& os, std::span<const SweepResult> results);
void write_points_csv(std::ostream& os, const SweepResult& result);
void write_downstream_csv(std::ostream& os, const std::string& method,
                          std::span<const DownstreamRow> rows, bool header = true);
void write_report(std::ostream& os, std::span<const SweepResult> results);

}  // namespace eqpnet

#endif  // EQPNET_BENCH_HPP

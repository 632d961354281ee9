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

#include "eqpnet/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "eqpnet/eqp.hpp"
#include "eqpnet/error.hpp"

namespace eqpnet {
namespace {

using nlohmann::json;

constexpr const char* kDatasetFormat = "eqpnet-dataset";
constexpr int kDatasetVersion = 1;
constexpr double kPptTol = 1e-10;

// Reference protocol sizes used to scale the test set.
constexpr double kRefPool2 = 3.05e5, kRefTest2 = 5e3;
constexpr double kRefPool3 = 9.4e4, kRefTest3 = 4e3;

// Stream tags separating the independent random streams of a dataset.
constexpr std::uint64_t kChainStream = 0x636861696eULL;
constexpr std::uint64_t kKindStream = 0x6b696e64ULL;
constexpr std::uint64_t kBuresSeedTag = 0x62757265ULL;
constexpr std::uint64_t kHaarSeedTag = 0x68616172ULL;
constexpr std::uint64_t kGridSeedTag = 0x67726964ULL;
constexpr std::uint64_t kMeasureSeedTag = 0x6d656173ULL;

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json matrix_to_json(const CMatrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      a.push_back(m(r, c).real());
      a.push_back(m(r, c).imag());
    }
  return a;
}

DensityMatrix matrix_from_json(const json& a) {
  const auto n = a.size() / 2;
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (a.size() % 2 != 0 || static_cast<std::size_t>(d * d) != n) {
    throw InvalidInput("density matrix array has invalid length");
  }
  CMatrix m(d, d);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c, k += 2) m(r, c) = {a[k].get<double>(), a[k + 1].get<double>()};
  return DensityMatrix::from_matrix(std::move(m));
}

json record_to_json(const DatasetRecord& r) {
  json j;
  j["id"] = r.id;
  j["kind"] = std::string(to_string(r.kind));
  j["params"] = r.params;
  j["seed"] = r.seed;
  j["level"] = r.level;
  j["rho"] = matrix_to_json(r.rho.matrix());
  if (r.reference.matrix() == r.rho.matrix()) {
    j["reference"] = nullptr;
  } else {
    j["reference"] = matrix_to_json(r.reference.matrix());
  }
  j["indices"] = r.measurement.indices;
  j["values"] = r.measurement.values;
  j["shots"] = r.measurement.shots ? json(*r.measurement.shots) : json(nullptr);
  j["target"] = r.target;
  json l;
  l["negativity"] = r.labels.negativity;
  l["entangled"] = r.labels.entangled ? json(*r.labels.entangled) : json(nullptr);
  l["reference_fidelity"] = r.labels.reference_fidelity;
  l["purity"] = r.labels.purity;
  j["labels"] = l;
  return j;
}

DatasetRecord record_from_json(const json& j) {
  DatasetRecord r;
  r.id = j.at("id").get<std::uint64_t>();
  r.kind = parse_ensemble_kind(j.at("kind").get<std::string>());
  r.params = j.at("params").get<std::vector<double>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.level = j.at("level").get<int>();
  r.rho = matrix_from_json(j.at("rho"));
  r.reference = j.at("reference").is_null() ? r.rho : matrix_from_json(j.at("reference"));
  r.measurement.indices = j.at("indices").get<std::vector<std::size_t>>();
  r.measurement.values = j.at("values").get<std::vector<double>>();
  if (!j.at("shots").is_null()) r.measurement.shots = j.at("shots").get<std::uint64_t>();
  r.target = j.at("target").get<std::vector<double>>();
  const json& l = j.at("labels");
  r.labels.negativity = l.at("negativity").get<double>();
  if (!l.at("entangled").is_null()) r.labels.entangled = l.at("entangled").get<bool>();
  r.labels.reference_fidelity = l.at("reference_fidelity").get<double>();
  r.labels.purity = l.at("purity").get<double>();
  if (r.measurement.indices.size() != r.measurement.values.size()) {
    throw InvalidInput("record indices and values differ in length");
  }
  return r;
}

json header_to_json(const PartitionHeader& h) {
  return json{{"format", kDatasetFormat},   {"version", kDatasetVersion},
              {"partition", h.partition},   {"family", h.family},
              {"n_qubits", h.n_qubits},
              {"seed", h.seed},             {"shots", h.shots},
              {"chain_sizes", h.chain_sizes}, {"chain_order", h.chain_order},
              {"count", h.count}};
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  const auto is_sep = [](char c) { return c == ',' || c == ';' || c == '\t' || c == ' ' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_sep(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
std::optional<T> parse_int(std::string_view s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double rmse(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw InvalidInput("rmse: vectors must have equal nonzero length (" + std::to_string(x.size()) +
                       " vs " + std::to_string(y.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s / static_cast<double>(x.size()));
}

Labels compute_labels(const DensityMatrix& rho, const DensityMatrix& reference,
                      std::span<const double> target) {
  Labels l;
  l.negativity = negativity(target);
  if (rho.n_qubits() == 2) l.entangled = min_eigenvalue(partial_transpose(rho, 1)) < -kPptTol;
  l.reference_fidelity = fidelity(rho, reference);
  l.purity = purity(rho);
  return l;
}

DatasetRecord make_record(std::uint64_t id, std::uint64_t seed, const GeneratedState& state,
                          const ProjectorFrame& frame, int level,
                          std::span<const std::size_t> indices, std::uint64_t shots, Rng& rng) {
  DatasetRecord r;
  r.id = id;
  r.kind = state.kind;
  r.params = state.params;
  r.seed = seed;
  r.rho = state.rho;
  r.reference = state.reference;
  r.level = level;
  r.measurement = shots == 0 ? exact_record(state.rho, frame, indices)
                             : simulate_counts_multinomial(state.rho, frame, indices, shots, rng);
  const RVector t = canonical_map(frame.n_qubits()).qp(state.rho);
  r.target.assign(t.data(), t.data() + t.size());
  r.labels = compute_labels(r.rho, r.reference, r.target);
  return r;
}

// ---------------------------------------------------------------------------

std::string_view to_string(DatasetFamily f) {
  return f == DatasetFamily::bures_mixture ? "bures_mixture" : "pauli_family";
}

DatasetFamily parse_dataset_family(std::string_view name) {
  if (name == "bures_mixture") return DatasetFamily::bures_mixture;
  if (name == "pauli_family") return DatasetFamily::pauli_family;
  throw InvalidInput("unknown dataset family '" + std::string(name) + "'");
}

DatasetOptions DatasetOptions::desk(int n_qubits) {
  DatasetOptions o;
  o.n_qubits = n_qubits;
  o.family = n_qubits >= 3 ? DatasetFamily::pauli_family : DatasetFamily::bures_mixture;
  o.pool_count = n_qubits >= 3 ? 20000 : 30000;
  return o;
}

void DatasetOptions::validate() const {
  if (n_qubits != 2 && n_qubits != 3) throw InvalidInput("dataset: only 2 or 3 qubits are supported");
  if (family == DatasetFamily::pauli_family && grid_resolution != 0 && grid_resolution < 2) {
    throw InvalidInput("dataset: grid resolution must be 0 (auto) or >= 2");
  }
  if (pool_count < 2) throw InvalidInput("dataset: pool must hold at least two states");
  if (!(bures_fraction >= 0.0 && bures_fraction <= 1.0)) {
    throw InvalidInput("dataset: bures fraction must lie in [0, 1]");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidInput("dataset: train fraction must lie in (0, 1)");
  }
  EnsembleSpec s;
  s.n_qubits = n_qubits;
  s.noise_min = noise_min;
  s.noise_max = noise_max;
  s.validate();
}

std::size_t scaled_test_count(int n_qubits, std::size_t pool_count) {
  const double pool = n_qubits >= 3 ? kRefPool3 : kRefPool2;
  const double test = n_qubits >= 3 ? kRefTest3 : kRefTest2;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(test * static_cast<double>(pool_count) / pool)));
}

std::size_t DatasetOptions::effective_test_count() const {
  return test_count != 0 ? test_count : scaled_test_count(n_qubits, pool_count);
}

namespace {

// Exact-count kind assignment: round(f n) Bures entries, shuffled.
std::vector<EnsembleKind> assign_kinds(std::size_t n, double bures_fraction, Rng& rng) {
  const auto n_bures = static_cast<std::size_t>(std::llround(bures_fraction * static_cast<double>(n)));
  std::vector<EnsembleKind> kinds(n, EnsembleKind::haar_noisy);
  std::fill_n(kinds.begin(), n_bures, EnsembleKind::bures);
  for (std::size_t i = n; i > 1; --i) std::swap(kinds[i - 1], kinds[static_cast<std::size_t>(rng.below(i))]);
  return kinds;
}

}  // namespace

SubsetChain make_chain(int n_qubits, std::vector<std::size_t> sizes, std::uint64_t seed) {
  const ProjectorFrame& frame = canonical_map(n_qubits).frame();
  if (sizes.empty()) sizes = default_chain_sizes(n_qubits);
  Rng rng = Rng::substream(seed, kChainStream);
  return nested_chain(frame, std::move(sizes), rng);
}

Dataset build_dataset(const DatasetOptions& opts) {
  opts.validate();
  const ProjectorFrame& frame = canonical_map(opts.n_qubits).frame();
  SubsetChain chain = make_chain(opts.n_qubits, opts.chain_sizes, opts.seed);

  std::vector<std::size_t> levels = opts.train_levels;
  if (levels.empty()) {
    levels.resize(chain.levels());
    std::iota(levels.begin(), levels.end(), std::size_t{0});
  }
  for (std::size_t l : levels) {
    if (l >= chain.levels()) throw InvalidInput("dataset: training level beyond the chain");
  }

  EnsembleSpec bures;
  bures.kind = EnsembleKind::bures;
  bures.n_qubits = opts.n_qubits;
  bures.seed = splitmix64(opts.seed ^ kBuresSeedTag);
  EnsembleSpec haar = bures;
  haar.kind = EnsembleKind::haar_noisy;
  haar.noise_min = opts.noise_min;
  haar.noise_max = opts.noise_max;
  haar.seed = splitmix64(opts.seed ^ kHaarSeedTag);
  const std::size_t n_test = opts.effective_test_count();
  const bool pauli = opts.family == DatasetFamily::pauli_family;
  EnsembleSpec grid = bures;
  grid.kind = EnsembleKind::pauli_family;
  grid.grid_resolution = opts.grid_resolution;
  grid.seed = splitmix64(opts.seed ^ kGridSeedTag);
  // Grid points are drawn without replacement, so test states never repeat training states.
  const EnsembleSampler bures_sampler(pauli ? grid : bures, pauli ? opts.pool_count + n_test : 0);
  const EnsembleSampler haar_sampler(haar, 0);
  const std::uint64_t measure_seed = splitmix64(opts.seed ^ kMeasureSeedTag);

  Rng kind_rng = Rng::substream(opts.seed, kKindStream);
  const std::vector<EnsembleKind> pool_kinds = assign_kinds(opts.pool_count, opts.bures_fraction, kind_rng);
  const std::vector<EnsembleKind> test_kinds = assign_kinds(n_test, opts.bures_fraction, kind_rng);

  const auto draw = [&](EnsembleKind k, std::uint64_t id) {
    return pauli || k == EnsembleKind::bures ? bures_sampler.draw(id) : haar_sampler.draw(id);
  };

  Dataset out{opts, chain, {}, {}, {}};
  auto n_train = static_cast<std::size_t>(std::llround(opts.train_fraction * static_cast<double>(opts.pool_count)));
  n_train = std::clamp<std::size_t>(n_train, 1, opts.pool_count - 1);
  out.train.reserve(n_train);
  out.validation.reserve(opts.pool_count - n_train);
  for (std::size_t i = 0; i < opts.pool_count; ++i) {
    const std::uint64_t id = i;
    Rng rng = Rng::substream(measure_seed, id);
    const std::size_t level = levels[static_cast<std::size_t>(rng.below(levels.size()))];
    DatasetRecord r = make_record(id, opts.seed, draw(pool_kinds[i], id), frame,
                                  static_cast<int>(level), chain.subset(level), opts.shots, rng);
    (i < n_train ? out.train : out.validation).push_back(std::move(r));
  }

  std::vector<std::size_t> all(frame.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  out.test.reserve(n_test);
  for (std::size_t i = 0; i < n_test; ++i) {
    const std::uint64_t id = opts.pool_count + i;
    Rng rng = Rng::substream(measure_seed, id);
    out.test.push_back(make_record(id, opts.seed, draw(test_kinds[i], id), frame, -1, all, opts.shots, rng));
  }
  return out;
}

std::vector<DatasetRecord> build_test_records(const EnsembleSpec& spec, std::size_t count,
                                              std::uint64_t shots, std::uint64_t first_id) {
  const EnsembleSampler sampler(spec, spec.kind == EnsembleKind::pauli_family ? first_id + count : 0);
  const ProjectorFrame& frame = canonical_map(spec.n_qubits).frame();
  std::vector<std::size_t> all(frame.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::uint64_t measure_seed = splitmix64(spec.seed ^ kMeasureSeedTag);
  std::vector<DatasetRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t id = first_id + i;
    Rng rng = Rng::substream(measure_seed, id);
    out.push_back(make_record(id, spec.seed, sampler.draw(id), frame, -1, all, shots, rng));
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_partition(std::ostream& os, const PartitionHeader& header,
                     std::span<const DatasetRecord> records) {
  PartitionHeader h = header;
  h.count = records.size();
  os << header_to_json(h).dump() << '\n';
  for (const auto& r : records) os << record_to_json(r).dump() << '\n';
  if (!os) throw IoError("failed to write dataset partition '" + header.partition + "'");
}

void write_partition(const std::string& path, const PartitionHeader& header,
                     std::span<const DatasetRecord> records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  try {
    write_partition(os, header, records);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

SubsetChain Partition::chain() const {
  return SubsetChain(universal_frame(header.n_qubits).size(), header.chain_sizes, header.chain_order);
}

Partition read_partition(std::istream& is, const std::string& source) {
  Partition p;
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) { throw ParseError(source, line_no, what); };
  if (!std::getline(is, line)) {
    line_no = 1;
    fail("missing dataset header");
  }
  line_no = 1;
  try {
    const json h = json::parse(line);
    if (h.value("format", "") != kDatasetFormat) fail("not an eqpnet dataset");
    if (h.value("version", 0) != kDatasetVersion) fail("unsupported dataset version");
    p.header.partition = h.at("partition").get<std::string>();
    p.header.family = h.at("family").get<std::string>();
    p.header.n_qubits = h.at("n_qubits").get<int>();
    p.header.seed = h.at("seed").get<std::uint64_t>();
    p.header.shots = h.at("shots").get<std::uint64_t>();
    p.header.chain_sizes = h.at("chain_sizes").get<std::vector<std::size_t>>();
    p.header.chain_order = h.at("chain_order").get<std::vector<std::size_t>>();
    p.header.count = h.at("count").get<std::size_t>();
  } catch (const json::exception& e) {
    fail(std::string("bad header: ") + e.what());
  }
  p.records.reserve(p.header.count);
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      p.records.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      fail(std::string("bad record: ") + e.what());
    } catch (const InvalidInput& e) {
      fail(std::string("bad record: ") + e.what());
    }
  }
  if (p.records.size() != p.header.count) {
    fail("header announces " + std::to_string(p.header.count) + " records, found " +
         std::to_string(p.records.size()));
  }
  return p;
}

Partition read_partition(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return read_partition(is, path);
}

void write_dataset(const Dataset& data, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  PartitionHeader h;
  h.n_qubits = data.options.n_qubits;
  h.family = std::string(to_string(data.options.family));
  h.seed = data.options.seed;
  h.shots = data.options.shots;
  h.chain_sizes = data.chain.sizes();
  h.chain_order = data.chain.order();
  const std::filesystem::path base(dir);
  h.partition = "train";
  write_partition((base / "train.jsonl").string(), h, data.train);
  h.partition = "validation";
  write_partition((base / "validation.jsonl").string(), h, data.validation);
  h.partition = "test";
  write_partition((base / "test.jsonl").string(), h, data.test);
}

TrainingSet to_training_set(std::span<const DatasetRecord> records, const ProjectorFrame& frame) {
  const auto n = static_cast<Eigen::Index>(records.size());
  const auto fs = static_cast<Eigen::Index>(frame.size());
  TrainingSet s{RMatrix(2 * fs, n), RMatrix(fs, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const DatasetRecord& r = records[static_cast<std::size_t>(k)];
    if (r.target.size() != frame.size()) throw InvalidInput("training record does not match the frame");
    const std::vector<double> x = encode_input(r.measurement, frame);
    s.inputs.col(k) = Eigen::Map<const RVector>(x.data(), 2 * fs);
    s.targets.col(k) = Eigen::Map<const RVector>(r.target.data(), fs);
  }
  return s;
}

MeasurementRecord restrict_record(const MeasurementRecord& full, std::span<const std::size_t> subset) {
  std::unordered_map<std::size_t, double> lookup;
  for (std::size_t k = 0; k < full.indices.size(); ++k) lookup[full.indices[k]] = full.values[k];
  MeasurementRecord out;
  out.shots = full.shots;
  for (std::size_t j : subset) {
    const auto it = lookup.find(j);
    if (it == lookup.end()) {
      throw InvalidInput("restrict_record: projector " + std::to_string(j) + " was not measured");
    }
    out.indices.push_back(j);
    out.values.push_back(it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(SweepMethod m) {
  switch (m) {
    case SweepMethod::net: return "net";
    case SweepMethod::maxlik: return "maxlik";
    case SweepMethod::mlme: return "mlme";
  }
  return "?";
}

SweepMethod parse_sweep_method(std::string_view name) {
  if (name == "net") return SweepMethod::net;
  if (name == "maxlik") return SweepMethod::maxlik;
  if (name == "mlme") return SweepMethod::mlme;
  throw InvalidInput("unknown method '" + std::string(name) + "' (expected net, maxlik or mlme)");
}

TrendFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("fit_line: need at least two points");
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidInput("fit_line: x values are all equal");
  TrendFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

double coefficient_of_variation(std::span<const double> means) {
  if (means.empty()) throw InvalidInput("coefficient_of_variation: no values");
  const double m = mean_of(means);
  double s = 0.0;
  for (double v : means) s += (v - m) * (v - m);
  const double sd = std::sqrt(s / static_cast<double>(means.size()));
  return m != 0.0 ? sd / m : 0.0;
}

void aggregate(SweepResult& result, std::span<const std::size_t> sizes) {
  std::map<std::size_t, std::size_t> failures;
  for (const auto& s : result.sizes) failures[s.size] = s.failures;
  result.sizes.clear();
  std::vector<double> xs, means;
  for (std::size_t size : sizes) {
    SizeStats st;
    st.size = size;
    st.failures = failures[size];
    double sum = 0.0;
    for (const auto& p : result.points)
      if (p.size == size) {
        sum += p.rmse;
        ++st.count;
      }
    if (st.count > 0) {
      st.mean = sum / static_cast<double>(st.count);
      double ss = 0.0;
      for (const auto& p : result.points)
        if (p.size == size) ss += (p.rmse - st.mean) * (p.rmse - st.mean);
      st.std = st.count > 1 ? std::sqrt(ss / static_cast<double>(st.count - 1)) : 0.0;
      xs.push_back(static_cast<double>(size));
      means.push_back(st.mean);
    }
    result.sizes.push_back(st);
  }
  result.trend = xs.size() >= 2 ? fit_line(xs, means) : TrendFit{};
  result.cov = means.empty() ? 0.0 : coefficient_of_variation(means);
}

SweepResult run_sweep(SweepMethod method, const SubsetChain& chain,
                      std::span<const DatasetRecord> test, const ProjectorFrame& frame,
                      const ResidualModel* model, const SweepOptions& opts) {
  if (method == SweepMethod::net && model == nullptr) {
    throw InvalidInput("run_sweep: the net method needs a trained model");
  }
  if (chain.frame_size() != frame.size()) throw InvalidInput("run_sweep: chain does not match the frame");
  opts.tomo.validate();
  std::vector<std::size_t> levels = opts.levels;
  if (levels.empty()) {
    levels.resize(chain.levels());
    std::iota(levels.begin(), levels.end(), std::size_t{0});
  }
  const CanonicalMap& cmap = canonical_map(frame.n_qubits());

  SweepResult result;
  result.method = std::string(to_string(method));
  std::vector<std::size_t> sizes;
  std::size_t attempts = 0, failed = 0;

  for (std::size_t level : levels) {
    const std::span<const std::size_t> subset = chain.subset(level);
    SizeStats st;
    st.size = subset.size();
    sizes.push_back(st.size);

    std::vector<MeasurementRecord> inputs;
    inputs.reserve(test.size());
    for (const auto& r : test) inputs.push_back(restrict_record(r.measurement, subset));

    RMatrix net_out;
    if (method == SweepMethod::net) {
      RMatrix x(2 * static_cast<Eigen::Index>(frame.size()), static_cast<Eigen::Index>(test.size()));
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const std::vector<double> e = encode_input(inputs[k], frame);
        x.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const RVector>(e.data(), x.rows());
      }
      net_out = model->forward_batch(x);
    }

    for (std::size_t k = 0; k < test.size(); ++k) {
      const DatasetRecord& r = test[k];
      ++attempts;
      try {
        RVector eqp;
        std::optional<DensityMatrix> rho;
        if (method == SweepMethod::net) {
          eqp = net_out.col(static_cast<Eigen::Index>(k));
          const std::span<const double> v(eqp.data(), static_cast<std::size_t>(eqp.size()));
          rho = reconstruct(v, frame).rho;
        } else {
          const TomoMethod tm = method == SweepMethod::maxlik ? TomoMethod::maxlik : TomoMethod::mlme;
          rho = reconstruct_state(tm, inputs[k], frame, opts.tomo).rho;
          eqp = cmap.qp(*rho);
        }
        if (!eqp.allFinite()) throw NumericalFailure("non-finite EQP estimate");
        const double e = rmse(std::span<const double>(eqp.data(), static_cast<std::size_t>(eqp.size())), r.target);
        result.points.push_back({r.id, st.size, e, fidelity(*rho, r.reference), purity(*rho)});
      } catch (const NumericalFailure&) {
        ++failed;
        ++st.failures;
      }
    }
    result.sizes.push_back(st);
  }
  if (static_cast<double>(failed) > opts.failure_budget * static_cast<double>(attempts)) {
    throw NumericalFailure("run_sweep(" + result.method + "): " + std::to_string(failed) + " of " +
                           std::to_string(attempts) + " reconstructions failed, above the " +
                           fmt(100.0 * opts.failure_budget) + "% budget");
  }
  aggregate(result, sizes);
  return result;
}

std::vector<DownstreamRow> eval_downstream(const SweepResult& sweep,
                                           std::span<const DatasetRecord> test) {
  std::unordered_map<std::uint64_t, const DatasetRecord*> by_id;
  for (const auto& r : test) by_id[r.id] = &r;
  std::vector<DownstreamRow> rows;
  for (const auto& s : sweep.sizes) {
    DownstreamRow row;
    row.size = s.size;
    double sf = 0.0, sp = 0.0;
    for (const auto& p : sweep.points) {
      if (p.size != s.size) continue;
      const auto it = by_id.find(p.id);
      if (it == by_id.end()) throw InvalidInput("eval_downstream: record " + std::to_string(p.id) + " not in dataset");
      const Labels& l = it->second->labels;
      sf += (p.fidelity - l.reference_fidelity) * (p.fidelity - l.reference_fidelity);
      sp += (p.purity - l.purity) * (p.purity - l.purity);
      ++row.count;
    }
    if (row.count > 0) {
      row.fidelity_rmse = std::sqrt(sf / static_cast<double>(row.count));
      row.purity_rmse = std::sqrt(sp / static_cast<double>(row.count));
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

MeasurementRecord import_counts(std::istream& is, int n_qubits, const std::string& source) {
  const ProjectorFrame& frame = canonical_map(n_qubits).frame();
  std::map<std::string, std::size_t, std::less<>> by_label;
  for (std::size_t i = 0; i < frame.size(); ++i) by_label[frame.atom(i).label()] = i;

  std::map<std::size_t, std::pair<double, std::size_t>> rows;  // index -> (freq, line)
  std::optional<std::uint64_t> common_shots;
  bool mixed_shots = false;
  std::string line;
  std::size_t line_no = 0;
  bool seen_data = false;
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view v(line);
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    const auto f = split_fields(v);
    if (f.empty()) continue;
    if (!seen_data && f[0] == "projector_id") {
      seen_data = true;
      continue;
    }
    seen_data = true;
    if (f.size() != 3) {
      throw ParseError(source, line_no, "expected 3 fields (projector_id, counts, shots), got " + std::to_string(f.size()));
    }
    std::size_t idx = 0;
    if (const auto n = parse_int<std::size_t>(f[0])) {
      idx = *n;
      if (idx >= frame.size()) {
        throw ParseError(source, line_no, "projector id " + std::string(f[0]) + " outside the " +
                                              std::to_string(frame.size()) + "-element frame");
      }
    } else if (const auto it = by_label.find(f[0]); it != by_label.end()) {
      idx = it->second;
    } else {
      throw ParseError(source, line_no, "unknown projector id '" + std::string(f[0]) + "'");
    }
    const auto counts = parse_int<std::uint64_t>(f[1]);
    const auto shots = parse_int<std::uint64_t>(f[2]);
    if (!counts || !shots) throw ParseError(source, line_no, "counts and shots must be non-negative integers");
    if (*shots == 0) throw ParseError(source, line_no, "shots must be positive");
    if (*counts > *shots) throw ParseError(source, line_no, "counts exceed shots");
    if (const auto it = rows.find(idx); it != rows.end()) {
      throw ParseError(source, line_no, "duplicate projector id " + std::string(f[0]) +
                                            " (first seen on line " + std::to_string(it->second.second) + ")");
    }
    rows[idx] = {static_cast<double>(*counts) / static_cast<double>(*shots), line_no};
    if (!common_shots) common_shots = *shots;
    else if (*common_shots != *shots) mixed_shots = true;
  }
  if (is.bad()) throw IoError(source + ": read failure");
  if (rows.empty()) throw ParseError(source, line_no, "no count rows found");
  MeasurementRecord rec;
  for (const auto& [idx, val] : rows) {
    rec.indices.push_back(idx);
    rec.values.push_back(val.first);
  }
  if (!mixed_shots) rec.shots = common_shots;
  return rec;
}

MeasurementRecord import_counts(const std::string& path, int n_qubits) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return import_counts(is, n_qubits, path);
}

// ---------------------------------------------------------------------------

void write_density(std::ostream& os, const CMatrix& rho) {
  os << "# eqpnet-density " << rho.rows() << '\n';
  for (Eigen::Index r = 0; r < rho.rows(); ++r) {
    for (Eigen::Index c = 0; c < rho.cols(); ++c) {
      os << (c ? " " : "") << fmt(rho(r, c).real()) << ' ' << fmt(rho(r, c).imag());
    }
    os << '\n';
  }
}

DensityMatrix read_density(std::istream& is, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view v(line);
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    for (std::string_view f : split_fields(v)) {
      double x = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), x);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
        throw ParseError(source, line_no, "not a number: '" + std::string(f) + "'");
      }
      values.push_back(x);
    }
  }
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(values.size()) / 2.0)));
  if (d < 2 || static_cast<std::size_t>(2 * d * d) != values.size()) {
    throw ParseError(source, line_no, "expected 2 d^2 numbers for a d x d matrix, got " +
                                          std::to_string(values.size()));
  }
  CMatrix m(d, d);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c, k += 2) m(r, c) = {values[k], values[k + 1]};
  try {
    return DensityMatrix::from_matrix(std::move(m));
  } catch (const InvalidInput& e) {
    throw ParseError(source, line_no, e.what());
  }
}

void write_counts(std::ostream& os, const MeasurementRecord& record, const ProjectorFrame& frame) {
  record.validate(frame);
  if (!record.shots) throw InvalidInput("write_counts: record has no shot count");
  const double shots = static_cast<double>(*record.shots);
  os << "projector_id,counts,shots\n";
  for (std::size_t k = 0; k < record.size(); ++k) {
    os << record.indices[k] << ',' << std::llround(record.values[k] * shots) << ',' << *record.shots << '\n';
  }
}

std::vector<SweepResult> read_sweep_csv(std::istream& is, const std::string& source) {
  std::vector<SweepResult> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line.rfind("method,", 0) == 0) continue;
    const auto f = split_fields(line);
    if (f.size() != 6) throw ParseError(source, line_no, "expected 6 sweep columns");
    SizeStats st;
    const auto size = parse_int<std::size_t>(f[1]);
    const auto count = parse_int<std::size_t>(f[4]);
    const auto failures = parse_int<std::size_t>(f[5]);
    const auto r1 = std::from_chars(f[2].data(), f[2].data() + f[2].size(), st.mean);
    const auto r2 = std::from_chars(f[3].data(), f[3].data() + f[3].size(), st.std);
    if (!size || !count || !failures || r1.ec != std::errc{} || r2.ec != std::errc{}) {
      throw ParseError(source, line_no, "malformed sweep row");
    }
    st.size = *size;
    st.count = *count;
    st.failures = *failures;
    if (out.empty() || out.back().method != f[0]) out.push_back(SweepResult{std::string(f[0]), {}, {}, 0.0, {}});
    out.back().sizes.push_back(st);
  }
  for (auto& r : out) {
    std::vector<double> xs, means;
    for (const auto& s : r.sizes)
      if (s.count > 0) {
        xs.push_back(static_cast<double>(s.size));
        means.push_back(s.mean);
      }
    if (xs.size() >= 2) r.trend = fit_line(xs, means);
    if (!means.empty()) r.cov = coefficient_of_variation(means);
  }
  return out;
}

void write_sweep_csv(std::ostream& os, std::span<const SweepResult> results) {
  os << "method,size,mean_rmse,std_rmse,count,failures\n";
  for (const auto& r : results)
    for (const auto& s : r.sizes) {
      os << r.method << ',' << s.size << ',' << fmt(s.mean) << ',' << fmt(s.std) << ',' << s.count
         << ',' << s.failures << '\n';
    }
}

void write_points_csv(std::ostream& os, const SweepResult& result) {
  os << "method,id,size,rmse,fidelity,purity\n";
  for (const auto& p : result.points) {
    os << result.method << ',' << p.id << ',' << p.size << ',' << fmt(p.rmse) << ','
       << fmt(p.fidelity) << ',' << fmt(p.purity) << '\n';
  }
}

void write_downstream_csv(std::ostream& os, const std::string& method,
                          std::span<const DownstreamRow> rows, bool header) {
  if (header) os << "method,size,fidelity_rmse,purity_rmse,count\n";
  for (const auto& r : rows) {
    os << method << ',' << r.size << ',' << fmt(r.fidelity_rmse) << ',' << fmt(r.purity_rmse) << ','
       << r.count << '\n';
  }
}

void write_report(std::ostream& os, std::span<const SweepResult> results) {
  os << "method mean_rmse slope intercept r2 cov\n";
  for (const auto& r : results) {
    std::vector<double> means;
    for (const auto& s : r.sizes)
      if (s.count > 0) means.push_back(s.mean);
    os << r.method << ' ' << fmt(means.empty() ? 0.0 : mean_of(means)) << ' ' << fmt(r.trend.slope)
       << ' ' << fmt(r.trend.intercept) << ' ' << fmt(r.trend.r2) << ' ' << fmt(r.cov) << '\n';
  }
}

}  // namespace eqpnet

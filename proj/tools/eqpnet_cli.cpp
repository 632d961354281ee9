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

// Command-line front end: dataset generation, reconstruction, training,
// sweeps and certification. Exit codes: 0 ok, 1 usage, 2 numerical, 3 I/O.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eqpnet/bench.hpp"
#include "eqpnet/eqp.hpp"
#include "eqpnet/error.hpp"
#include "eqpnet/neuralnet.hpp"
#include "eqpnet/tomography.hpp"

namespace {

using namespace eqpnet;

enum Exit { kOk = 0, kUsage = 1, kNumerical = 2, kIo = 3 };

// Output goes to --out when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw IoError("cannot open " + path + " for writing");
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

PureState bell(const std::string& name) {
  const double s = std::numbers::sqrt2 / 2.0;
  CVector a = CVector::Zero(4);
  if (name == "phi+" || name == "phi-") {
    a[0] = s;
    a[3] = name == "phi+" ? s : -s;
  } else if (name == "psi+" || name == "psi-") {
    a[1] = s;
    a[2] = name == "psi+" ? s : -s;
  } else {
    throw InvalidInput("unknown Bell state '" + name + "' (phi+, phi-, psi+, psi-)");
  }
  return PureState::from_amplitudes(a);
}

struct StateArgs {
  std::string rho_path;
  std::string bell_name;
  std::optional<double> werner_p;

  void add(CLI::App* app) {
    app->add_option("--rho", rho_path, "Density matrix text file");
    app->add_option("--bell", bell_name, "Bell state: phi+, phi-, psi+, psi-");
    app->add_option("--werner", werner_p, "Werner state mixing parameter p");
  }

  bool given() const { return !rho_path.empty() || !bell_name.empty() || werner_p.has_value(); }

  DensityMatrix load() const {
    const int n = static_cast<int>(!rho_path.empty()) + static_cast<int>(!bell_name.empty()) +
                  static_cast<int>(werner_p.has_value());
    if (n != 1) throw InvalidInput("give exactly one of --rho, --bell, --werner");
    if (!bell_name.empty()) return density_from_pure(bell(bell_name));
    if (werner_p) return werner(*werner_p);
    std::ifstream is(rho_path);
    if (!is) throw IoError("cannot open " + rho_path);
    return read_density(is, rho_path);
  }
};

// ---------------------------------------------------------------------------

struct GenArgs {
  int qubits = 2;
  std::uint64_t seed = 1;
  std::size_t count = 0;
  std::size_t test_count = 0;
  std::uint64_t shots = 0;
  std::string family;
  std::string ensemble;
  std::optional<std::uint64_t> chain_seed;
  std::vector<std::size_t> chain;
  std::vector<std::size_t> train_levels;
  double werner_mu = 0.5, werner_sigma = 0.25;
  std::string out = "data";
};

int run_gen(const GenArgs& a) {
  if (!a.ensemble.empty()) {
    // Out-of-distribution test set: only test.jsonl, chained to another seed.
    EnsembleSpec spec;
    spec.kind = parse_ensemble_kind(a.ensemble);
    spec.n_qubits = a.qubits;
    spec.seed = a.seed;
    spec.werner_mu = a.werner_mu;
    spec.werner_sigma = a.werner_sigma;
    spec.grid_resolution = 0;
    const std::size_t count = a.count != 0 ? a.count : 500;
    const std::vector<DatasetRecord> recs = build_test_records(spec, count, a.shots);
    const SubsetChain chain = make_chain(a.qubits, a.chain, a.chain_seed.value_or(a.seed));
    PartitionHeader h;
    h.partition = "test";
    h.family = std::string(to_string(spec.kind));
    h.n_qubits = a.qubits;
    h.seed = a.seed;
    h.shots = a.shots;
    h.chain_sizes = chain.sizes();
    h.chain_order = chain.order();
    std::filesystem::create_directories(a.out);
    write_partition((std::filesystem::path(a.out) / "test.jsonl").string(), h, recs);
    std::cout << "wrote " << recs.size() << " " << a.ensemble << " test records to " << a.out << "\n";
    return kOk;
  }
  DatasetOptions o = DatasetOptions::desk(a.qubits);
  if (!a.family.empty()) o.family = parse_dataset_family(a.family);
  if (a.count != 0) o.pool_count = a.count;
  o.test_count = a.test_count;
  o.shots = a.shots;
  o.seed = a.seed;
  o.chain_sizes = a.chain;
  o.train_levels = a.train_levels;
  if (a.chain_seed) throw InvalidInput("--chain-seed only applies with --ensemble");
  const Dataset d = build_dataset(o);
  write_dataset(d, a.out);
  std::cout << "wrote " << d.train.size() << " train, " << d.validation.size() << " validation, "
            << d.test.size() << " test records to " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int run_eqp(const StateArgs& s, bool certify, std::uint64_t seed, const std::string& out) {
  const DensityMatrix rho = s.load();
  const ProjectorFrame& frame = canonical_map(rho.n_qubits()).frame();
  const RVector p = canonical_qp(rho, frame);
  Sink sink(out);
  std::ostream& os = sink.get();
  os << "index,label,eqp\n";
  for (std::size_t i = 0; i < frame.size(); ++i) {
    os << i << ',' << frame.atom(i).label() << ',' << fmt(p[static_cast<Eigen::Index>(i)]) << '\n';
  }
  std::cerr << "negativity " << fmt(negativity(p)) << '\n';
  if (certify) {
    StationaryOptions so = StationaryOptions::defaults_for(rho.n_qubits());
    so.seed = seed;
    const std::vector<Atom> atoms = stationary_points(rho, so);
    const Certificate c = nnls_certify(atoms, rho);
    std::cerr << "verdict " << to_string(c.verdict) << " residual " << fmt(c.residual) << '\n';
  }
  return kOk;
}

int run_certify(const StateArgs& s, std::uint64_t seed, std::uint64_t shots) {
  const DensityMatrix rho = s.load();
  StationaryOptions so = StationaryOptions::defaults_for(rho.n_qubits());
  so.seed = seed;
  const std::vector<Atom> atoms = stationary_points(rho, so);
  CertifyOptions co = shots != 0 ? CertifyOptions::for_shots(shots) : CertifyOptions{};
  co.seed = seed;
  const Certificate c = nnls_certify(atoms, rho, co);
  std::cout << "verdict " << to_string(c.verdict) << '\n'
            << "residual " << fmt(c.residual) << '\n'
            << "distance_lower_bound " << fmt(c.distance_lower_bound) << '\n'
            << "stationary_points " << atoms.size() << '\n'
            << "dictionary " << c.atoms.size() << '\n'
            << "rounds " << c.rounds << '\n';
  if (rho.n_qubits() == 2) {
    std::cout << "ppt_min_eigenvalue " << fmt(min_eigenvalue(partial_transpose(rho, 1))) << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct TomoArgs {
  std::string counts;
  std::string data;
  std::size_t record = 0;
  std::size_t projectors = 0;
  int qubits = 2;
  std::string method = "maxlik";
  int max_iter = 5000;
  std::string out;
};

int run_tomo(const TomoArgs& a) {
  MeasurementRecord rec;
  int n = a.qubits;
  if (!a.counts.empty() == !a.data.empty()) throw InvalidInput("give exactly one of --counts, --data");
  if (!a.counts.empty()) {
    rec = import_counts(a.counts, n);
  } else {
    const Partition p = read_partition(a.data);
    if (a.record >= p.records.size()) throw InvalidInput("--record beyond the dataset");
    n = p.header.n_qubits;
    rec = p.records[a.record].measurement;
    if (a.projectors != 0) {
      const SubsetChain chain = p.chain();
      rec = restrict_record(rec, chain.subset(chain.level_of_size(a.projectors)));
    }
  }
  const ProjectorFrame& frame = canonical_map(n).frame();
  TomoOptions opts;
  opts.max_iter = a.max_iter;
  const TomoResult r = reconstruct_state(parse_tomo_method(a.method), rec, frame, opts);
  Sink sink(a.out);
  write_density(sink.get(), r.rho.matrix());
  std::cerr << "method " << a.method << " iterations " << r.iterations << " rejected "
            << r.rejected_steps << " objective " << fmt(r.objective) << " converged "
            << (r.converged ? "yes" : "no") << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data = "data";
  std::string out = "model.bin";
  int width = 0;
  int blocks = -1;
  std::string activation = "silu";
  int epochs = 200;
  int batch = 256;
  int patience = 20;
  double lr = 1e-3;
  double lr_decay = 1.0;
  std::string loss = "mse";
  double w_neg = 2.0;
  std::uint64_t seed = 1;
  bool verbose = false;
};

int run_train(const TrainArgs& a) {
  const std::filesystem::path dir(a.data);
  const Partition tr = read_partition((dir / "train.jsonl").string());
  const Partition va = read_partition((dir / "validation.jsonl").string());
  const ProjectorFrame& frame = canonical_map(tr.header.n_qubits).frame();
  ModelConfig mc = ModelConfig::for_qubits(tr.header.n_qubits);
  if (a.width > 0) mc.width = a.width;
  if (a.blocks >= 0) mc.n_blocks = a.blocks;
  mc.activation = parse_activation(a.activation);
  mc.init_seed = a.seed;
  TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch;
  tc.patience = a.patience;
  tc.learning_rate = a.lr;
  tc.lr_decay = a.lr_decay;
  tc.loss.kind = parse_loss_kind(a.loss);
  tc.loss.w_neg = a.w_neg;
  tc.shuffle_seed = a.seed;
  const TrainResult r = train(to_training_set(tr.records, frame), to_training_set(va.records, frame),
                              mc, tc, a.verbose ? &std::cerr : nullptr);
  r.model.save(a.out);
  std::cout << "epoch,train_loss,val_rmse\n";
  for (const auto& e : r.history) std::cout << e.epoch << ',' << fmt(e.train_loss) << ',' << fmt(e.val_rmse) << '\n';
  std::cerr << "best epoch " << r.best_epoch << " val_rmse " << fmt(r.best_val_rmse) << " saved " << a.out << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string data;
  std::vector<std::string> methods;
  std::string model;
  std::vector<std::size_t> sizes;
  std::size_t limit = 0;
  int max_iter = 5000;
  std::string out;
  std::string points;
  std::string downstream;
};

int run_sweep_cmd(const SweepArgs& a) {
  std::vector<SweepMethod> methods;
  for (const auto& m : a.methods) methods.push_back(parse_sweep_method(m));
  const Partition p = read_partition(a.data);
  const ProjectorFrame& frame = canonical_map(p.header.n_qubits).frame();
  const SubsetChain chain = p.chain();
  std::span<const DatasetRecord> test(p.records);
  if (a.limit != 0 && a.limit < test.size()) test = test.first(a.limit);
  std::optional<ResidualModel> model;
  if (!a.model.empty()) model = ResidualModel::load(a.model);
  SweepOptions so;
  so.tomo.max_iter = a.max_iter;
  for (std::size_t s : a.sizes) so.levels.push_back(chain.level_of_size(s));

  std::vector<SweepResult> results;
  for (SweepMethod method : methods) {
    results.push_back(run_sweep(method, chain, test, frame, model ? &*model : nullptr, so));
  }
  {
    Sink sink(a.out);
    write_sweep_csv(sink.get(), results);
  }
  if (!a.points.empty()) {
    Sink sink(a.points);
    for (std::size_t i = 0; i < results.size(); ++i) {
      std::ostringstream tmp;
      write_points_csv(tmp, results[i]);
      std::string s = tmp.str();
      if (i > 0) s.erase(0, s.find('\n') + 1);
      sink.get() << s;
    }
  }
  if (!a.downstream.empty()) {
    Sink sink(a.downstream);
    for (std::size_t i = 0; i < results.size(); ++i) {
      write_downstream_csv(sink.get(), results[i].method, eval_downstream(results[i], test), i == 0);
    }
  }
  write_report(std::cerr, results);
  return kOk;
}

// ---------------------------------------------------------------------------

struct ImportArgs {
  std::string counts;
  int qubits = 2;
  std::string method = "maxlik";
  std::string reference;
  std::string out;
  std::string rho_out;
};

int run_import(const ImportArgs& a) {
  const MeasurementRecord rec = import_counts(a.counts, a.qubits);
  const ProjectorFrame& frame = canonical_map(a.qubits).frame();
  const TomoResult r = reconstruct_state(parse_tomo_method(a.method), rec, frame);
  const RVector p = canonical_map(a.qubits).qp(r.rho);
  Sink sink(a.out);
  std::ostream& os = sink.get();
  os << "index,label,frequency,eqp\n";
  std::vector<double> freq(frame.size(), std::nan(""));
  for (std::size_t k = 0; k < rec.size(); ++k) freq[rec.indices[k]] = rec.values[k];
  for (std::size_t i = 0; i < frame.size(); ++i) {
    os << i << ',' << frame.atom(i).label() << ',' << (std::isnan(freq[i]) ? std::string() : fmt(freq[i]))
       << ',' << fmt(p[static_cast<Eigen::Index>(i)]) << '\n';
  }
  if (!a.rho_out.empty()) {
    Sink rs(a.rho_out);
    write_density(rs.get(), r.rho.matrix());
  }
  std::cerr << "imported " << rec.size() << " projectors; " << a.method << " iterations " << r.iterations
            << " negativity " << fmt(negativity(p)) << '\n';
  if (!a.reference.empty()) {
    StateArgs s;
    s.bell_name = a.reference;
    std::cerr << "fidelity " << fmt(fidelity(r.rho, s.load())) << '\n';
  }
  return kOk;
}

int run_report(const std::vector<std::string>& files, const std::string& out) {
  std::vector<SweepResult> all;
  for (const auto& f : files) {
    std::ifstream is(f);
    if (!is) throw IoError("cannot open " + f);
    for (auto& r : read_sweep_csv(is, f)) all.push_back(std::move(r));
  }
  Sink sink(out);
  write_report(sink.get(), all);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eqpnet: entanglement quasiprobabilities from incomplete measurements"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a dataset (train/validation/test JSONL)");
  g->add_option("--qubits", gen.qubits, "Number of qubits (2 or 3)")->check(CLI::Range(2, 3));
  g->add_option("--seed", gen.seed, "Dataset seed");
  g->add_option("--count", gen.count, "Training+validation pool size (test-set size with --ensemble)");
  g->add_option("--test-count", gen.test_count, "Test-set size (0 = scaled default)");
  g->add_option("--shots", gen.shots, "Shots per setting (0 = exact probabilities)");
  g->add_option("--family", gen.family, "bures_mixture or pauli_family");
  g->add_option("--ensemble", gen.ensemble, "Write only a test set of this ensemble (werner, pauli_family, ...)");
  g->add_option("--chain-seed", gen.chain_seed, "Seed of the nested chain for --ensemble test sets");
  g->add_option("--chain", gen.chain, "Nested subset sizes");
  g->add_option("--train-levels", gen.train_levels, "Chain levels used by training records");
  g->add_option("--werner-mu", gen.werner_mu, "Werner p distribution mean");
  g->add_option("--werner-sigma", gen.werner_sigma, "Werner p distribution spread");
  g->add_option("--out", gen.out, "Output directory");

  StateArgs eqp_state;
  bool eqp_certify = false;
  std::uint64_t eqp_seed = 0x5eed;
  std::string eqp_out;
  auto* e = app.add_subcommand("eqp", "Canonical EQP of one state, optionally certified");
  eqp_state.add(e);
  e->add_flag("--certify", eqp_certify, "Also run the separability certificate");
  e->add_option("--seed", eqp_seed, "Stationary-point seed");
  e->add_option("--out", eqp_out, "CSV output (default stdout)");

  TomoArgs tomo;
  auto* t = app.add_subcommand("tomo", "Reconstruct a density matrix with maxlik or mlme");
  t->add_option("--counts", tomo.counts, "Counts file (projector_id,counts,shots)");
  t->add_option("--data", tomo.data, "Dataset partition file");
  t->add_option("--record", tomo.record, "Record index within --data");
  t->add_option("--projectors", tomo.projectors, "Restrict to this chain size");
  t->add_option("--qubits", tomo.qubits, "Number of qubits for --counts")->check(CLI::Range(2, 3));
  t->add_option("--method", tomo.method, "maxlik or mlme");
  t->add_option("--max-iter", tomo.max_iter, "Iteration cap");
  t->add_option("--out", tomo.out, "Density matrix output (default stdout)");

  TrainArgs tr;
  auto* tn = app.add_subcommand("train", "Train the residual network on a dataset directory");
  tn->add_option("--data", tr.data, "Dataset directory");
  tn->add_option("--out", tr.out, "Model output path");
  tn->add_option("--width", tr.width, "Hidden width (0 = default for the qubit count)");
  tn->add_option("--blocks", tr.blocks, "Residual blocks (-1 = default)");
  tn->add_option("--activation", tr.activation, "silu or softplus");
  tn->add_option("--epochs", tr.epochs, "Epoch cap");
  tn->add_option("--batch", tr.batch, "Minibatch size");
  tn->add_option("--patience", tr.patience, "Early-stop patience in epochs");
  tn->add_option("--lr", tr.lr, "Learning rate");
  tn->add_option("--lr-decay", tr.lr_decay, "Per-epoch learning-rate factor");
  tn->add_option("--loss", tr.loss, "mse or sign_weighted");
  tn->add_option("--w-neg", tr.w_neg, "Weight of negative targets for sign_weighted");
  tn->add_option("--seed", tr.seed, "Initialization and shuffling seed");
  tn->add_flag("--verbose", tr.verbose, "Log every epoch");

  SweepArgs ev;
  auto* v = app.add_subcommand("eval", "Per-size RMSE of a trained model on a test set");
  v->add_option("--model", ev.model, "Model file")->required();
  v->add_option("--data", ev.data, "Test partition file")->required();
  v->add_option("--projectors,--chain", ev.sizes, "Subset sizes to evaluate (default: all)");
  v->add_option("--limit", ev.limit, "Use the first N test records");
  v->add_option("--out", ev.out, "CSV output (default stdout)");
  v->add_option("--downstream", ev.downstream, "Fidelity/purity RMSE CSV");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Benchmark sweep over the nested chain");
  s->add_option("--data", sw.data, "Test partition file")->required();
  s->add_option("--method", sw.methods, "net, maxlik or mlme (repeatable)")->required();
  s->add_option("--model", sw.model, "Model file for the net method");
  s->add_option("--projectors,--chain", sw.sizes, "Subset sizes to evaluate (default: all)");
  s->add_option("--limit", sw.limit, "Use the first N test records");
  s->add_option("--max-iter", sw.max_iter, "Tomography iteration cap");
  s->add_option("--out", sw.out, "Sweep CSV output (default stdout)");
  s->add_option("--points", sw.points, "Per-record CSV output");
  s->add_option("--downstream", sw.downstream, "Fidelity/purity RMSE CSV");

  StateArgs cert_state;
  std::uint64_t cert_seed = 0x5eed, cert_shots = 0;
  auto* c = app.add_subcommand("certify", "Separability certificate for one state");
  cert_state.add(c);
  c->add_option("--seed", cert_seed, "Stationary-point seed");
  c->add_option("--shots", cert_shots, "Shot budget behind the state (sets the tolerance)");

  ImportArgs im;
  auto* i = app.add_subcommand("import", "Import experimental counts and reconstruct");
  i->add_option("--counts", im.counts, "Counts file")->required();
  i->add_option("--qubits", im.qubits, "Number of qubits")->check(CLI::Range(2, 3));
  i->add_option("--method", im.method, "maxlik or mlme");
  i->add_option("--reference", im.reference, "Bell state to report fidelity against");
  i->add_option("--out", im.out, "EQP CSV output (default stdout)");
  i->add_option("--rho-out", im.rho_out, "Reconstructed density matrix output");

  std::vector<std::string> report_files;
  std::string report_out;
  auto* r = app.add_subcommand("report", "Trend and CoV summary from sweep CSVs");
  r->add_option("files", report_files, "Sweep CSV files")->required();
  r->add_option("--out", report_out, "Report output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return run_gen(gen);
    if (*e) return run_eqp(eqp_state, eqp_certify, eqp_seed, eqp_out);
    if (*t) return run_tomo(tomo);
    if (*tn) return run_train(tr);
    if (*v) {
      ev.methods = {"net"};
      return run_sweep_cmd(ev);
    }
    if (*s) return run_sweep_cmd(sw);
    if (*c) return run_certify(cert_state, cert_seed, cert_shots);
    if (*i) return run_import(im);
    if (*r) return run_report(report_files, report_out);
  } catch (const InvalidInput& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  } catch (const NumericalFailure& err) {
    std::cerr << "numerical failure: " << err.what() << '\n';
    return kNumerical;
  } catch (const IoError& err) {
    std::cerr << "I/O error: " << err.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "I/O error: " << err.what() << '\n';
    return kIo;
  }
  return kUsage;
}

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

#include <benchmark/benchmark.h>

#include <numeric>

#include "eqpnet/bench.hpp"
#include "eqpnet/eqp.hpp"
#include "eqpnet/neuralnet.hpp"
#include "eqpnet/tomography.hpp"

namespace {

using namespace eqpnet;

std::vector<std::size_t> full_frame(int n) {
  std::vector<std::size_t> v(canonical_map(n).size());
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

void BM_HermitianEig(benchmark::State& state) {
  Rng rng(1);
  const int n = static_cast<int>(state.range(0));
  const CMatrix m = bures_state(n, rng).matrix();
  for (auto _ : state) benchmark::DoNotOptimize(hermitian_eig(m));
}
BENCHMARK(BM_HermitianEig)->Arg(2)->Arg(3);

void BM_CanonicalQp(benchmark::State& state) {
  Rng rng(2);
  const int n = static_cast<int>(state.range(0));
  const DensityMatrix rho = bures_state(n, rng);
  const CanonicalMap& cm = canonical_map(n);
  for (auto _ : state) benchmark::DoNotOptimize(cm.qp(rho));
}
BENCHMARK(BM_CanonicalQp)->Arg(2)->Arg(3);

void BM_StationaryPoints(benchmark::State& state) {
  Rng rng(3);
  const DensityMatrix rho = bures_state(2, rng);
  StationaryOptions o;
  o.restarts = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(stationary_points(rho, o));
}
BENCHMARK(BM_StationaryPoints)->Arg(20)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Certify(benchmark::State& state) {
  const DensityMatrix w = werner(state.range(0) / 100.0);
  const auto atoms = stationary_points(w, StationaryOptions{});
  for (auto _ : state) benchmark::DoNotOptimize(nnls_certify(atoms, w));
}
BENCHMARK(BM_Certify)->Arg(30)->Arg(40)->Unit(benchmark::kMillisecond);

// Tomography cost at a sparse and a complete subset.
template <TomoMethod M>
void BM_Tomography(benchmark::State& state) {
  Rng rng(4);
  const ProjectorFrame& f = canonical_map(2).frame();
  const DensityMatrix rho = bures_state(2, rng);
  auto idx = full_frame(2);
  idx.resize(static_cast<std::size_t>(state.range(0)));
  const MeasurementRecord rec = exact_record(rho, f, idx);
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_state(M, rec, f));
}
BENCHMARK(BM_Tomography<TomoMethod::maxlik>)->Arg(10)->Arg(36)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Tomography<TomoMethod::mlme>)->Arg(10)->Arg(36)->Unit(benchmark::kMillisecond);

ModelConfig bench_model(int width) {
  ModelConfig c = ModelConfig::for_qubits(2);
  c.width = width;
  c.n_blocks = 2;
  return c;
}

void BM_ForwardBatch(benchmark::State& state) {
  const ResidualModel m(bench_model(static_cast<int>(state.range(0))));
  const RMatrix x = RMatrix::Random(72, 256);
  for (auto _ : state) benchmark::DoNotOptimize(m.forward_batch(x));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_ForwardBatch)->Arg(128)->Arg(512);

void BM_BackwardBatch(benchmark::State& state) {
  const ResidualModel m(bench_model(static_cast<int>(state.range(0))));
  const RMatrix x = RMatrix::Random(72, 256);
  const RMatrix t = RMatrix::Random(36, 256);
  for (auto _ : state) benchmark::DoNotOptimize(backward_batch(m, x, t));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_BackwardBatch)->Arg(128)->Arg(512);

void BM_SimulateCounts(benchmark::State& state) {
  Rng rng(5);
  const ProjectorFrame& f = canonical_map(2).frame();
  const DensityMatrix rho = bures_state(2, rng);
  const auto idx = full_frame(2);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_counts_multinomial(rho, f, idx, 10000, rng));
}
BENCHMARK(BM_SimulateCounts);

}  // namespace

BENCHMARK_MAIN();

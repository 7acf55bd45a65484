// Serial reference kernels against their OpenMP counterparts. The range
// argument of the parallel cases is the thread count.

#include <vector>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "tempest/epidemic_sim.hpp"
#include "tempest/oracle.hpp"
#include "tempest/stochastic_graph.hpp"

using namespace tempest;

namespace {

struct KroneckerFixture {
  DynamicGraph graph = random_markov_graph(10, 14, GraphKind::Amei, 7);
  SubgraphEnumeration sub = enumerate_subgraphs(graph);
  EpidemicParams params = EpidemicParams::homogeneous(10, 0.4, 1.0);
  std::vector<double> x = std::vector<double>(sub.labels() * 10, 1.0);
  std::vector<double> y = std::vector<double>(x.size());
};

RandomMatrixSampler sampler() {
  Matrix means = Matrix::Constant(30, 30, 0.4);
  means.diagonal().setZero();
  return {SamplerKind::M2, means, Vector::Constant(30, 0.5), Vector::Constant(30, 1.0)};
}

const ExperimentGraph& experiment_graph() {
  static const ExperimentGraph g = build_experiment_graph_iv(200, 0.2, 1);
  return g;
}

const std::vector<double> kGrid{2e-3, 3e-3, 4e-3, 5e-3};

void BM_KroneckerApplySerial(benchmark::State& state) {
  KroneckerFixture f;
  for (auto _ : state) {
    reference::kronecker_apply(f.sub, f.params, f.x, f.y);
    benchmark::DoNotOptimize(f.y.data());
  }
}

void BM_KroneckerApplyOmp(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  KroneckerFixture f;
  const KroneckerSumOperator op(f.sub, f.params);
  for (auto _ : state) {
    op.apply(f.x, f.y);
    benchmark::DoNotOptimize(f.y.data());
  }
}

void BM_CertificateMcSerial(benchmark::State& state) {
  const auto s = sampler();
  for (auto _ : state) benchmark::DoNotOptimize(reference::expected_certificate_mc(s, 2000, 1).mean);
}

void BM_CertificateMcOmp(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const auto s = sampler();
  for (auto _ : state) benchmark::DoNotOptimize(expected_certificate(s, ExpectationMode::MonteCarlo, 2000, 1).mean);
}

void BM_EmpiricalThresholdSerial(benchmark::State& state) {
  const auto& g = experiment_graph();
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::empirical_threshold(g.graph, 0.05, kGrid, 16, 300, 1).z_star.data());
}

void BM_EmpiricalThresholdOmp(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const auto& g = experiment_graph();
  for (auto _ : state)
    benchmark::DoNotOptimize(empirical_threshold(g.graph, 0.05, kGrid, 16, 300, 1).z_star.data());
}

}  // namespace

BENCHMARK(BM_KroneckerApplySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KroneckerApplyOmp)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CertificateMcSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CertificateMcOmp)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EmpiricalThresholdSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EmpiricalThresholdOmp)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

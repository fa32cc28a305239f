#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fragmentor/law.hpp"
#include "fragmentor/longtime.hpp"
#include "fragmentor/process.hpp"
#include "fragmentor/recomb.hpp"
#include "fragmentor/semigroup.hpp"
#include "fragmentor/trees.hpp"

using namespace fragmentor;

namespace {

SetPartition blocks(std::initializer_list<std::initializer_list<int>> atoms) {
  std::vector<SiteMask> masks;
  for (const auto& a : atoms) {
    SiteMask m = 0;
    for (int s : a) m |= site_bit(s);
    masks.push_back(m);
  }
  return SetPartition::from_atoms(masks);
}

RateFamily seven_sites() {
  return RateFamily::create(first_sites(7), {{blocks({{0, 5, 6}, {1, 2, 3}, {4}}), 1.0},
                                             {blocks({{0}, {1, 2, 3, 4, 5, 6}}), 0.4},
                                             {blocks({{0, 1, 4, 5, 6}, {2}, {3}}), 0.7}});
}

/// n sites, every single-site split {i}|rest plus the finest partition.
RateFamily chain_family(int n) {
  std::vector<RateEntry> entries;
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int i = 0; i < n; ++i) {
    entries.push_back({SetPartition::from_atoms({site_bit(i), first_sites(n) & ~site_bit(i)}), u(rng)});
  }
  return RateFamily::create(first_sites(n), entries);
}

}  // namespace

static void BM_Closure(benchmark::State& state) {
  const RateFamily rho = chain_family(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(closure(rho));
  state.counters["states"] = static_cast<double>(closure(rho).size());
}
BENCHMARK(BM_Closure)->DenseRange(3, 8);

static void BM_FormulaLaw(benchmark::State& state) {
  const ProcessModel m = closure(chain_family(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(law_distribution(m, 1.0));
}
BENCHMARK(BM_FormulaLaw)->DenseRange(3, 6);

static void BM_SemigroupLaw(benchmark::State& state) {
  const ProcessModel m = closure(chain_family(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(semigroup_distribution(m, 1.0));
}
BENCHMARK(BM_SemigroupLaw)->DenseRange(3, 8);

static void BM_EnumerateTrees(benchmark::State& state) {
  const ProcessModel m = closure(chain_family(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_trees(m, m.gamma_star()));
}
BENCHMARK(BM_EnumerateTrees)->DenseRange(3, 6);

static void BM_Simulate(benchmark::State& state) {
  const ProcessModel m = closure(chain_family(6));
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(m, 1.0, n, 1));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(10000)->Arg(100000);

static void BM_QuasiLimit(benchmark::State& state) {
  const ProcessModel m = closure(chain_family(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(quasi_limit(m));
}
BENCHMARK(BM_QuasiLimit)->DenseRange(3, 8);

static void BM_Solve(benchmark::State& state) {
  const RateFamily rho = seven_sites();
  const ProcessModel m = closure(rho);
  const AlphabetSpec spec = AlphabetSpec::create(first_sites(7), std::vector<int>(7, 3));
  const Measure mu = Measure::uniform(spec);
  for (auto _ : state) benchmark::DoNotOptimize(solve(m, mu, 1.0));
}
BENCHMARK(BM_Solve);

static void BM_Recombine(benchmark::State& state) {
  const AlphabetSpec spec = AlphabetSpec::create(first_sites(7), std::vector<int>(7, 3));
  std::mt19937_64 rng(3);
  std::vector<double> w(spec.states());
  std::exponential_distribution<double> e(1.0);
  double s = 0.0;
  for (double& x : w) s += (x = e(rng));
  for (double& x : w) x /= s;
  const Measure mu(spec, w);
  const SetPartition d = blocks({{0, 5, 6}, {1, 2, 3}, {4}});
  for (auto _ : state) benchmark::DoNotOptimize(recombine(mu, d));
}
BENCHMARK(BM_Recombine);
BENCHMARK_MAIN();

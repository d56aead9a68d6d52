// Serial reference kernels against the OpenMP versions, plus one full fit.
// Threaded cases report wall time.
//
//   bench_kernels --benchmark_filter=Scores

#include "hlsmm/data.hpp"
#include "hlsmm/kernels.hpp"
#include "hlsmm/solver.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <random>

namespace {

using namespace hlsmm;

struct Problem {
  DesignMatrix x;
  Matrix w;
  Vector c;
};

const Problem& problem(std::size_t m) {
  static std::map<std::size_t, Problem> cache;
  auto it = cache.find(m);
  if (it == cache.end()) {
    std::mt19937_64 eng(m);
    std::normal_distribution<double> n;
    std::vector<MatrixSample> s;
    for (std::size_t i = 0; i < m; ++i) {
      s.push_back({Matrix::NullaryExpr(32, 32, [&] { return n(eng); }), i % 2 ? 1 : -1});
    }
    Problem p{DesignMatrix(Dataset(std::move(s))), Matrix::NullaryExpr(32, 32, [&] { return n(eng); }),
              Vector::NullaryExpr(static_cast<Index>(m), [&] { return n(eng); })};
    it = cache.emplace(m, std::move(p)).first;
  }
  return it->second;
}

void BM_ScoresReference(benchmark::State& st) {
  const Problem& p = problem(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::scores_reference(p.x, p.w));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_Scores(benchmark::State& st) {
  const Problem& p = problem(static_cast<std::size_t>(st.range(0)));
  const int threads = static_cast<int>(st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::scores(p.x, p.w, threads));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_WeightedSumReference(benchmark::State& st) {
  const Problem& p = problem(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::weighted_sum_reference(p.x, p.c));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_WeightedSum(benchmark::State& st) {
  const Problem& p = problem(static_cast<std::size_t>(st.range(0)));
  const int threads = static_cast<int>(st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::weighted_sum(p.x, p.c, threads));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_SyntheticFit(benchmark::State& st) {
  const Dataset d = make_synthetic(SyntheticSpec{}).data;
  Hyperparams hp;
  hp.rank = 2;
  for (auto _ : st) benchmark::DoNotOptimize(fit(d, hp, std::nullopt, FitOptions{static_cast<int>(st.range(0))}));
}

const std::vector<std::int64_t> kSizes{256, 4096};

BENCHMARK(BM_ScoresReference)->ArgsProduct({kSizes});
BENCHMARK(BM_Scores)->ArgsProduct({kSizes, {1, 2, 4}})->UseRealTime();
BENCHMARK(BM_WeightedSumReference)->ArgsProduct({kSizes});
BENCHMARK(BM_WeightedSum)->ArgsProduct({kSizes, {1, 2, 4}})->UseRealTime();
BENCHMARK(BM_SyntheticFit)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();

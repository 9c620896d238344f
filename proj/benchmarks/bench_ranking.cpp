#include <benchmark/benchmark.h>

#include <vector>

#include "cfs/ranking.hpp"
#include "cfs/rng.hpp"

namespace {

cfs::Permutation random_permutation(cfs::Rng& rng, std::size_t n) {
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  for (std::size_t k = n; k > 1; --k) {
    std::swap(order[k - 1], order[rng.uniform_int(k)]);
  }
  return cfs::Permutation::from_order(std::move(order));
}

void PairwiseDistance(benchmark::State& state) {
  cfs::Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const cfs::Permutation a = random_permutation(rng, n);
  const cfs::Permutation b = random_permutation(rng, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cfs::pairwise_distance(a, b));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(PairwiseDistance)->RangeMultiplier(4)->Range(8, 2048)->Complexity();

void RankScores(benchmark::State& state) {
  cfs::Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(n);
  for (double& s : scores) s = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(cfs::rank(scores));
  }
}
BENCHMARK(RankScores)->Arg(10)->Arg(100)->Arg(1000);

void ScoreItems(benchmark::State& state) {
  cfs::Rng rng(3);
  const auto p = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 10;
  std::vector<double> w(p), x(n * p);
  for (double& v : w) v = rng.normal();
  for (double& v : x) v = rng.normal();
  cfs::RankingModel model;
  model.add(0, w);
  const cfs::FactorMatrix factors(0, n, p, x);
  const cfs::FactorMask mask = cfs::FactorMask::ones(p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cfs::score_items(model, 0, factors, mask));
  }
}
BENCHMARK(ScoreItems)->Arg(8)->Arg(20)->Arg(64);

}  // namespace

#include <benchmark/benchmark.h>

#include "cfs/env.hpp"
#include "cfs/oracle.hpp"
#include "cfs/policy.hpp"
#include "cfs/rng.hpp"

namespace {

cfs::Dataset bench_dataset(std::uint32_t p, std::size_t count) {
  cfs::GenConfig config;
  config.num_page_views = count;
  config.p = p;
  config.l = 8;
  config.n_items = 10;
  config.num_clusters = 2;
  config.seed = 77;
  return cfs::generate(config);
}

void EnvRollout(benchmark::State& state) {
  const cfs::Dataset data = bench_dataset(
      static_cast<std::uint32_t>(state.range(0)), 8);
  const cfs::RankingModel model = cfs::make_ranking_model(data);
  cfs::EnvParams params;
  cfs::Rng rng(5);
  std::size_t i = 0;
  for (auto _ : state) {
    const cfs::Episode episode = cfs::rollout(
        data.page_views[i++ % data.size()],
        [&](const cfs::EnvState&) {
          return rng.uniform() < 0.5 ? cfs::Action::Keep : cfs::Action::Skip;
        },
        model, data.costs, params);
    benchmark::DoNotOptimize(episode.final_loss.loss);
  }
}
BENCHMARK(EnvRollout)->Arg(8)->Arg(20);

void TrainingEpisode(benchmark::State& state) {
  const cfs::Dataset data = bench_dataset(
      static_cast<std::uint32_t>(state.range(0)), 8);
  const cfs::RankingModel model = cfs::make_ranking_model(data);
  cfs::EnvParams env_params;
  cfs::Rng init_rng(7);
  const std::size_t input = data.l + data.p + 1;
  cfs::Mlp actor =
      cfs::Mlp::init(cfs::MlpShape{{input, 128, 128, 2}}, init_rng);
  cfs::Mlp critic =
      cfs::Mlp::init(cfs::MlpShape{{input, 128, 128, 1}}, init_rng);
  cfs::Adam actor_opt(actor.params().size(), cfs::AdamParams{.lr = 1e-4});
  cfs::Adam critic_opt(critic.params().size(), cfs::AdamParams{.lr = 1e-3});
  cfs::Rng rng(9);
  std::size_t i = 0;
  for (auto _ : state) {
    const cfs::Episode episode = cfs::rollout(
        data.page_views[i++ % data.size()],
        [&](const cfs::EnvState& s) {
          return rng.uniform() < cfs::actor_probs(actor, s)[1]
                     ? cfs::Action::Keep
                     : cfs::Action::Skip;
        },
        model, data.costs, env_params);
    cfs::policy_gradient_step(actor, critic, episode, actor_opt, critic_opt,
                              cfs::PgParams{1.0, 0.0});
  }
}
BENCHMARK(TrainingEpisode)->Arg(8)->Arg(20);

void OracleEnumeration(benchmark::State& state) {
  const cfs::Dataset data = bench_dataset(
      static_cast<std::uint32_t>(state.range(0)), 2);
  const cfs::RankingModel model = cfs::make_ranking_model(data);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cfs::exhaustive_best_mask(
        data.page_views[0], model, data.costs, 0.9));
  }
}
BENCHMARK(OracleEnumeration)->DenseRange(8, 16, 4);

}  // namespace

BENCHMARK_MAIN();

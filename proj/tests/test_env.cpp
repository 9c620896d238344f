#include <doctest.h>

#include <cmath>

#include "cfs/env.hpp"
#include "cfs/rng.hpp"
#include "support/reference.hpp"

using namespace cfs;

namespace {

struct Fixture {
  PageView page_view;
  RankingModel model;
  CostVector costs;

  static Fixture make(std::vector<double> weights, std::vector<double> costs_in,
                      std::size_t n_items, std::uint64_t seed) {
    const std::size_t p = weights.size();
    Rng rng(seed);
    std::vector<double> values(n_items * p);
    for (double& v : values) v = rng.normal();
    Fixture fx{PageView{ContextVector{{0.3, -0.7}, 0},
                        FactorMatrix(0, n_items, p, std::move(values)),
                        weights},
               RankingModel{}, CostVector(std::move(costs_in))};
    fx.model.add(0, fx.page_view.weights);
    return fx;
  }
};

EnvParams shaped_params(double lambda = 0.01, double beta = 0.5) {
  EnvParams params;
  params.lambda = lambda;
  params.beta = beta;
  params.r_c = 1.0;
  params.gamma = 1.0;
  params.reward_mode = RewardMode::Shaped;
  return params;
}

}  // namespace

TEST_SUITE("env") {

TEST_CASE("reset yields the all-ones working indicator") {
  auto fx = Fixture::make({1.0, 0.5, -0.2, 0.1}, {1, 1, 1, 1}, 5, 2);
  const Env env(fx.page_view, fx.model, fx.costs, shaped_params());
  const EnvState state = env.reset();
  CHECK(state.step == 0);
  CHECK(state.decision_memory == std::vector<std::uint8_t>{1, 1, 1, 1});
  CHECK(state.context == fx.page_view.context.embedding);
  CHECK(state.dimension() == 2 + 4 + 1);
  CHECK(env.reset() == state);
}

TEST_CASE("state vector layout is context, step fraction, memory") {
  auto fx = Fixture::make({1.0, 0.5}, {1, 1}, 4, 3);
  const Env env(fx.page_view, fx.model, fx.costs, shaped_params());
  EnvState state = env.reset();
  auto [next, reward, done] = env.step(state, Action::Skip);
  const std::vector<double> v = next.to_vector();
  REQUIRE(v.size() == 2 + 2 + 1);
  CHECK(v[0] == 0.3);
  CHECK(v[1] == -0.7);
  CHECK(v[2] == 0.5);  // step 1 of 2
  CHECK(v[3] == 0.0);
  CHECK(v[4] == 1.0);
}

TEST_CASE("shaped rewards decompose into cost and threshold terms") {
  // Factor 0 carries no weight, so skipping it cannot move the ranking.
  auto fx = Fixture::make({0.0, 1.0}, {3.0, 1.0}, 10, 4);
  EnvParams params = shaped_params(0.01, 0.5);
  const Env env(fx.page_view, fx.model, fx.costs, params);

  SUBCASE("skip with distortion under beta is free") {
    auto [next, reward, done] = env.step(env.reset(), Action::Skip);
    CHECK(reward == 0.0);
    CHECK(!done);
  }
  SUBCASE("keep pays the factor's scaled cost") {
    auto [next, reward, done] = env.step(env.reset(), Action::Keep);
    CHECK(reward == -(0.01 * 10.0 * 3.0));
    CHECK(reward == doctest::Approx(-0.3));
  }
  SUBCASE("distortion above beta costs r_c") {
    // Skipping the only informative factor scrambles the ranking.
    EnvParams tight = shaped_params(0.01, 0.05);
    const Env env2(fx.page_view, fx.model, fx.costs, tight);
    auto [mid, r0, d0] = env2.step(env2.reset(), Action::Skip);
    auto [last, r1, d1] = env2.step(mid, Action::Skip);
    CHECK(d1);
    CHECK(r1 == -1.0);  // distance > beta, skip otherwise free
  }
}

TEST_CASE("terminal mode pays -loss at the end, zero before") {
  auto fx = Fixture::make({1.0, -0.5, 0.2}, {1.0, 2.0, 3.0}, 6, 5);
  EnvParams params = shaped_params(0.01);
  params.reward_mode = RewardMode::Terminal;
  const Env env(fx.page_view, fx.model, fx.costs, params);

  EnvState state = env.reset();
  double total = 0.0;
  std::vector<Action> actions{Action::Keep, Action::Skip, Action::Keep};
  for (Action a : actions) {
    auto [next, reward, done] = env.step(state, a);
    total += reward;
    if (!done) CHECK(reward == 0.0);
    state = next;
  }
  const auto parts = env.loss_of(FactorMask(state.decision_memory));
  CHECK(total == -parts.loss);
}

TEST_CASE("terminal return equals -loss for random action sequences") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 2 + rng.uniform_int(8);
    std::vector<double> w(p), c(p);
    for (double& v : w) v = rng.normal();
    for (double& v : c) v = rng.lognormal(-3.0, 1.0);
    auto fx = Fixture::make(w, c, 2 + rng.uniform_int(8), rng.next_u64());
    EnvParams params = shaped_params(0.9);
    params.reward_mode = RewardMode::Terminal;
    const Episode episode = rollout(
        fx.page_view,
        [&](const EnvState&) {
          return rng.uniform() < 0.5 ? Action::Keep : Action::Skip;
        },
        fx.model, fx.costs, params);
    double total = 0.0;
    for (const Transition& tr : episode.transitions) total += tr.reward;
    CHECK(std::abs(total + episode.final_loss.loss) < 1e-12);
  }
}

TEST_CASE("decision memory suffix stays all-ones") {
  Rng rng(37);
  auto fx = Fixture::make({0.4, -0.1, 0.9, 0.2, -0.6}, {1, 1, 1, 1, 1}, 5, 6);
  const Env env(fx.page_view, fx.model, fx.costs, shaped_params());
  EnvState state = env.reset();
  for (std::size_t k = 0; k < 5; ++k) {
    for (std::size_t t = state.step; t < 5; ++t) {
      CHECK(state.decision_memory[t] == 1);
    }
    auto [next, reward, done] =
        env.step(state, rng.uniform() < 0.5 ? Action::Keep : Action::Skip);
    state = next;
  }
}

TEST_CASE("shaped efficiency rewards sum to the loss cost term") {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t p = 2 + rng.uniform_int(6);
    std::vector<double> w(p), c(p);
    for (double& v : w) v = rng.normal();
    for (double& v : c) v = rng.lognormal(-2.0, 0.7);
    auto fx = Fixture::make(w, c, 4, rng.next_u64());
    const EnvParams params = shaped_params(0.7, 0.3);
    const Env env(fx.page_view, fx.model, fx.costs, params);

    EnvState state = env.reset();
    double efficiency_total = 0.0;
    double expected = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      const Action action = rng.uniform() < 0.5 ? Action::Keep : Action::Skip;
      const std::size_t factor = env.factor_at(k);
      auto [next, reward, done] = env.step(state, action);
      // The reward must be exactly the efficiency penalty, alone or summed
      // with the constant threshold penalty.
      const double g =
          action == Action::Keep ? -(params.lambda * 4.0 * fx.costs[factor]) : 0.0;
      CHECK((reward == g || reward == -params.r_c + g));
      efficiency_total += g;
      if (action == Action::Keep) {
        expected += -(params.lambda * 4.0 * fx.costs[factor]);
      }
      state = next;
    }
    CHECK(efficiency_total == expected);
  }
}

TEST_CASE("stepping a finished episode fails") {
  auto fx = Fixture::make({1.0, 2.0}, {1, 1}, 4, 8);
  const Env env(fx.page_view, fx.model, fx.costs, shaped_params());
  EnvState state = env.reset();
  auto [s1, r1, d1] = env.step(state, Action::Keep);
  auto [s2, r2, d2] = env.step(s1, Action::Keep);
  CHECK(d2);
  CHECK_THROWS_AS(env.step(s2, Action::Keep), StateError);
}

TEST_CASE("rollout with constant policies") {
  auto fx = Fixture::make({0.5, -1.0, 0.25}, {1.0, 2.0, 3.0}, 6, 9);
  const EnvParams params = shaped_params(0.01);

  const Episode keep = rollout(
      fx.page_view, [](const EnvState&) { return Action::Keep; }, fx.model,
      fx.costs, params);
  CHECK(keep.final_mask == FactorMask::ones(3));
  CHECK(keep.final_loss.distance == 0.0);

  const Episode skip = rollout(
      fx.page_view, [](const EnvState&) { return Action::Skip; }, fx.model,
      fx.costs, params);
  CHECK(skip.final_mask == FactorMask::zeros(3));
  CHECK(skip.final_loss.cost_term == 0.0);
  CHECK(skip.length() == 3);
}

TEST_CASE("seeded stochastic rollouts are reproducible") {
  auto fx = Fixture::make({0.5, -1.0, 0.25, 0.8}, {1, 1, 1, 1}, 6, 10);
  const EnvParams params = shaped_params();
  auto run = [&](std::uint64_t seed) {
    Rng rng(seed);
    return rollout(
        fx.page_view,
        [&](const EnvState&) {
          return rng.uniform() < 0.5 ? Action::Keep : Action::Skip;
        },
        fx.model, fx.costs, params);
  };
  const Episode a = run(99);
  const Episode b = run(99);
  REQUIRE(a.length() == b.length());
  for (std::size_t k = 0; k < a.length(); ++k) {
    CHECK(a.transitions[k].action == b.transitions[k].action);
    CHECK(a.transitions[k].reward == b.transitions[k].reward);
  }
  CHECK(a.final_mask == b.final_mask);
}

TEST_CASE("cost-descending visit order decides expensive factors first") {
  auto fx = Fixture::make({1.0, 2.0, 3.0}, {1.0, 5.0, 2.0}, 4, 11);
  EnvParams params = shaped_params();
  params.visit_order = VisitOrder::DescendingCost;
  const Env env(fx.page_view, fx.model, fx.costs, params);
  CHECK(env.factor_at(0) == 1);
  CHECK(env.factor_at(1) == 2);
  CHECK(env.factor_at(2) == 0);
}

TEST_CASE("env parameter validation") {
  auto fx = Fixture::make({1.0}, {1.0}, 4, 12);
  EnvParams params = shaped_params();
  params.beta = 0.0;
  CHECK_THROWS_AS(Env(fx.page_view, fx.model, fx.costs, params), ConfigError);
  params = shaped_params();
  params.lambda = -1.0;
  CHECK_THROWS_AS(Env(fx.page_view, fx.model, fx.costs, params), ConfigError);
  params = shaped_params();
  params.gamma = 1.5;
  CHECK_THROWS_AS(Env(fx.page_view, fx.model, fx.costs, params), ConfigError);
}

}  // TEST_SUITE

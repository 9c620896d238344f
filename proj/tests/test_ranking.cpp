#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cfs/ranking.hpp"
#include "cfs/rng.hpp"
#include "support/reference.hpp"

using namespace cfs;

namespace {

FactorMatrix make_factors(RequestId id, std::size_t n, std::size_t p,
                          std::vector<double> values) {
  return FactorMatrix(id, n, p, std::move(values));
}

Permutation perm(std::vector<std::uint32_t> order) {
  return Permutation::from_order(std::move(order));
}

}  // namespace

TEST_SUITE("ranking") {

TEST_CASE("score_items computes the masked linear score") {
  RankingModel model;
  model.add(1, {1.0, 1.0});
  const FactorMatrix factors = make_factors(1, 2, 2, {2.0, 3.0, 0.0, 0.0});

  const auto full = score_items(model, 1, factors, FactorMask::ones(2));
  CHECK(full[0] == 5.0);

  const auto masked =
      score_items(model, 1, factors, FactorMask({std::vector<std::uint8_t>{0, 1}}));
  CHECK(masked[0] == 3.0);
}

TEST_CASE("score_items matches a scalar-loop oracle") {
  RankingModel model;
  model.add(7, {0.5, -2.0, 1.0});
  const FactorMatrix factors =
      make_factors(7, 2, 3, {4.0, 1.0, 3.0, 0.0, 0.0, 0.0});
  const std::vector<std::uint8_t> bits{1, 0, 1};
  const auto scores = score_items(model, 7, factors, FactorMask(bits));
  CHECK(scores[0] == 5.0);
  CHECK(scores[0] ==
        ref::masked_score({0.5, -2.0, 1.0}, factors.row(0), bits));
}

TEST_CASE("score_items with all-ones mask is bit-identical to a dot product") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t p = 1 + rng.uniform_int(12);
    std::vector<double> w(p), x(2 * p);
    for (double& v : w) v = rng.normal();
    for (double& v : x) v = rng.normal();
    RankingModel model;
    model.add(0, w);
    const FactorMatrix factors = make_factors(0, 2, p, x);
    const auto scores = score_items(model, 0, factors, FactorMask::ones(p));
    double plain = 0.0;
    for (std::size_t k = 0; k < p; ++k) plain += w[k] * x[k];
    CHECK(scores[0] == plain);
  }
}

TEST_CASE("score_items error paths") {
  RankingModel model;
  model.add(1, {1.0, 2.0});
  const FactorMatrix factors = make_factors(1, 2, 2, {1, 2, 3, 4});
  CHECK_THROWS_AS(score_items(model, 99, factors, FactorMask::ones(2)),
                  MissingModelError);
  CHECK_THROWS_AS(score_items(model, 1, factors, FactorMask::ones(3)),
                  ShapeError);
}

TEST_CASE("factor matrix invariants") {
  CHECK_THROWS_AS(make_factors(0, 1, 2, {1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(make_factors(0, 2, 2, {1.0, 2.0, 3.0}), ShapeError);
  CHECK_THROWS_AS(
      make_factors(0, 2, 2, {1.0, std::nan(""), 3.0, 4.0}), ValueError);
  CHECK_THROWS_AS(CostVector({1.0, 0.0}), ValueError);
  CHECK_THROWS_AS(CostVector({-1.0}), ValueError);
}

TEST_CASE("rank sorts descending with index tie-break") {
  CHECK(rank(std::vector<double>{3.0, 1.0, 2.0}).order ==
        std::vector<std::uint32_t>{0, 2, 1});
  CHECK(rank(std::vector<double>{1.0, 1.0}).order ==
        std::vector<std::uint32_t>{0, 1});
  CHECK(rank(std::vector<double>{-1.0, 5.0, 5.0, 0.0}).order ==
        std::vector<std::uint32_t>{1, 2, 3, 0});
}

TEST_CASE("rank matches the stable selection oracle on random scores") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.uniform_int(20);
    std::vector<double> scores(n);
    // Coarse grid so ties actually happen.
    for (double& s : scores) s = static_cast<double>(rng.uniform_int(5));
    CHECK(rank(scores).order == ref::rank_order(scores));
  }
}

TEST_CASE("rank rejects NaN") {
  CHECK_THROWS_AS(rank(std::vector<double>{1.0, std::nan("")}),
                  InvalidScoreError);
}

TEST_CASE("permutation round trip and validation") {
  const Permutation sigma = perm({2, 0, 1});
  for (std::size_t pos = 0; pos < sigma.size(); ++pos) {
    CHECK(sigma.rank_of[sigma.order[pos]] == pos);
  }
  CHECK_THROWS_AS(perm({0, 0, 1}), ValueError);
  CHECK_THROWS_AS(perm({0, 3}), ValueError);
}

TEST_CASE("pairwise distance basics") {
  const Permutation identity = perm({0, 1, 2, 3});
  CHECK(pairwise_distance(identity, identity) == 0.0);
  CHECK(pairwise_distance(identity, perm({3, 2, 1, 0})) == 1.0);
  CHECK(pairwise_distance(perm({0, 1, 2}), perm({0, 2, 1})) ==
        doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(pairwise_distance(identity, perm({0, 1})), ShapeError);
}

TEST_CASE("pairwise distance equals brute-force enumeration") {
  // Exhaustive over all permutation pairs at n = 4.
  std::vector<std::vector<std::uint32_t>> perms;
  std::vector<std::uint32_t> base{0, 1, 2, 3};
  do {
    perms.push_back(base);
  } while (std::next_permutation(base.begin(), base.end()));
  for (const auto& a : perms) {
    for (const auto& b : perms) {
      const double got =
          pairwise_distance(Permutation::from_order(a), Permutation::from_order(b));
      CHECK(got == ref::pair_distance(a, b));
    }
  }

  // Random spot checks at a bigger n.
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_int(40);
    std::vector<std::uint32_t> a(n), b(n);
    std::iota(a.begin(), a.end(), 0u);
    std::iota(b.begin(), b.end(), 0u);
    for (std::size_t k = n; k > 1; --k) {
      std::swap(a[k - 1], a[rng.uniform_int(k)]);
      std::swap(b[k - 1], b[rng.uniform_int(k)]);
    }
    CHECK(pairwise_distance(Permutation::from_order(a),
                            Permutation::from_order(b)) ==
          ref::pair_distance(a, b));
  }
}

TEST_CASE("cfs_loss decomposition and hand-checked instance") {
  RankingModel model;
  model.add(3, {1.0, -1.0, 0.5});
  const FactorMatrix factors =
      make_factors(3, 3, 3, {2, 1, 0, 1, 3, 2, 0, 2, 4});
  const CostVector costs({3.0, 5.0, 2.0});
  const CfsLossParams params(0.01);

  SUBCASE("all-ones mask has zero distance") {
    const auto parts =
        cfs_loss(factors, model, costs, FactorMask::ones(3), params);
    CHECK(parts.distance == 0.0);
    CHECK(parts.cost_term == 30.0);
    CHECK(parts.loss == 0.01 * 30.0);
  }
  SUBCASE("all-zeros mask costs nothing") {
    const auto parts =
        cfs_loss(factors, model, costs, FactorMask::zeros(3), params);
    CHECK(parts.cost_term == 0.0);
    CHECK(parts.distance == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("hand-evaluated masked instance") {
    // Full scores (1, -1, 0): order (0, 2, 1). Mask (1,0,1) ties all items
    // at 2, so the candidate order is (0, 1, 2) and only the {1,2} pair
    // flips: distance 1/3, kept cost (3 + 2) * 3 items = 15.
    const auto parts = cfs_loss(factors, model, costs,
                                FactorMask({std::vector<std::uint8_t>{1, 0, 1}}),
                                params);
    CHECK(parts.distance == doctest::Approx(1.0 / 3.0));
    CHECK(parts.cost_term == 15.0);
    CHECK(parts.loss == parts.distance + 0.01 * parts.cost_term);
    const auto expected =
        ref::loss(PageView{ContextVector{{0.0}, 0}, factors, {1.0, -1.0, 0.5}},
                  costs.values(), {1, 0, 1}, 0.01);
    CHECK(parts.loss == doctest::Approx(expected.loss));
  }
}

TEST_CASE("cfs_loss identity holds exactly on random instances") {
  Rng rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t p = 1 + rng.uniform_int(8);
    const std::size_t n = 2 + rng.uniform_int(8);
    std::vector<double> w(p), x(n * p), c(p);
    for (double& v : w) v = rng.normal();
    for (double& v : x) v = rng.normal();
    for (double& v : c) v = rng.lognormal(0.0, 1.0);
    RankingModel model;
    model.add(0, w);
    const FactorMatrix factors = make_factors(0, n, p, x);
    std::vector<std::uint8_t> bits(p);
    for (auto& b : bits) b = rng.uniform() < 0.5 ? 1 : 0;
    const auto parts = cfs_loss(factors, model, CostVector(c),
                                FactorMask(bits), CfsLossParams(0.37));
    CHECK(parts.loss == parts.distance + 0.37 * parts.cost_term);
    CHECK(parts.distance >= 0.0);
    CHECK(parts.distance <= 1.0);
  }
}

TEST_CASE("monotone mask dominance at zero distance") {
  Rng rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t p = 2 + rng.uniform_int(6);
    const std::size_t n = 3 + rng.uniform_int(6);
    std::vector<double> w(p), x(n * p), c(p);
    for (double& v : w) v = rng.normal();
    for (double& v : x) v = rng.normal();
    for (double& v : c) v = rng.lognormal(0.0, 0.5);
    RankingModel model;
    model.add(0, w);
    const FactorMatrix factors = make_factors(0, n, p, x);
    const CostVector costs(c);
    const CfsLossParams params(0.05);

    std::vector<std::uint8_t> small(p);
    for (auto& b : small) b = rng.uniform() < 0.5 ? 1 : 0;
    const auto small_parts =
        cfs_loss(factors, model, costs, FactorMask(small), params);
    if (small_parts.distance != 0.0) continue;
    std::vector<std::uint8_t> big = small;
    for (auto& b : big) {
      if (rng.uniform() < 0.5) b = 1;
    }
    const auto big_parts =
        cfs_loss(factors, model, costs, FactorMask(big), params);
    CHECK(big_parts.loss >= small_parts.loss);
  }
}

}  // TEST_SUITE

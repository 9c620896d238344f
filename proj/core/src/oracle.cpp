#include "cfs/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <vector>

namespace cfs {

namespace {

constexpr std::size_t kSinglePageViewCap = 22;
constexpr std::size_t kDatasetCap = 16;

void check_cap(std::size_t p, std::size_t cap, const char* what) {
  if (p > cap) {
    throw Error(std::string(what) + ": p=" + std::to_string(p) +
                " exceeds the enumeration cap of " + std::to_string(cap));
  }
  if (p == 0) throw ShapeError(std::string(what) + ": p must be positive");
}

// Distance of every mask against the full ranking of one page view,
// accumulated into sums[mask_value]. Gray-code order: consecutive masks
// differ by one factor, so the score vector is updated incrementally.
void accumulate_distances(const PageView& pv, const RankingModel& model,
                          std::vector<double>& sums) {
  const std::size_t p = pv.factors.p();
  const std::size_t n = pv.factors.n_items();
  const std::uint64_t total = 1ull << p;

  std::vector<double> contribution(p * n);
  for (std::size_t k = 0; k < p; ++k) {
    FactorMask only = FactorMask::zeros(p);
    only.set(k, true);
    const std::vector<double> column =
        score_items(model, pv.factors.request_id(), pv.factors, only);
    std::copy(column.begin(), column.end(), contribution.begin() + k * n);
  }
  const Permutation full_perm = rank(
      score_items(model, pv.factors.request_id(), pv.factors,
                  FactorMask::ones(p)));

  std::vector<double> scores(n, 0.0);  // mask 0: everything skipped
  std::uint64_t gray = 0;
  for (std::uint64_t i = 0;; ++i) {
    sums[gray] += pairwise_distance(full_perm, rank(scores));
    if (i + 1 == total) break;
    const std::uint64_t next_gray = (i + 1) ^ ((i + 1) >> 1);
    const auto flipped =
        static_cast<std::size_t>(std::countr_zero(gray ^ next_gray));
    const double* column = contribution.data() + flipped * n;
    if (next_gray >> flipped & 1ull) {
      for (std::size_t j = 0; j < n; ++j) scores[j] += column[j];
    } else {
      for (std::size_t j = 0; j < n; ++j) scores[j] -= column[j];
    }
    gray = next_gray;
  }
}

// True when mask value `a` wins the tie-break against `b`: fewer kept
// factors first, then the lexicographically smaller bit string
// (bit 0 compared first, 0 before 1).
bool tie_break_before(std::uint64_t a, std::uint64_t b, std::size_t p) {
  const int pop_a = std::popcount(a);
  const int pop_b = std::popcount(b);
  if (pop_a != pop_b) return pop_a < pop_b;
  for (std::size_t k = 0; k < p; ++k) {
    const std::uint64_t bit_a = a >> k & 1ull;
    const std::uint64_t bit_b = b >> k & 1ull;
    if (bit_a != bit_b) return bit_a < bit_b;
  }
  return false;
}

OracleResult pick_best(const std::vector<double>& distance_sums,
                       std::uint64_t count, const CostVector& costs,
                       double lambda, std::size_t n_items, std::size_t p) {
  const std::uint64_t total = 1ull << p;
  std::uint64_t best = 0;
  double best_loss = 0.0;
  double best_distance = 0.0;
  double best_cost = 0.0;
  bool have_best = false;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double kept_cost = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      if (mask >> k & 1ull) kept_cost += costs[k];
    }
    const double cost_term = static_cast<double>(n_items) * kept_cost;
    const double mean_distance =
        distance_sums[mask] / static_cast<double>(count);
    const double loss = mean_distance + lambda * cost_term;
    if (!have_best || loss < best_loss ||
        (loss == best_loss && tie_break_before(mask, best, p))) {
      have_best = true;
      best = mask;
      best_loss = loss;
      best_distance = mean_distance;
      best_cost = cost_term;
    }
  }
  OracleResult result;
  result.best_mask = FactorMask::from_value(static_cast<std::uint32_t>(best), p);
  result.best_loss = best_loss;
  result.best_distance = best_distance;
  result.best_cost = best_cost;
  result.evaluated_count = total;
  return result;
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValueError("oracle: lambda must be finite and >= 0");
  }
}

}  // namespace

OracleResult exhaustive_best_mask(const PageView& page_view,
                                  const RankingModel& model,
                                  const CostVector& costs, double lambda) {
  const std::size_t p = page_view.factors.p();
  check_cap(p, kSinglePageViewCap, "oracle");
  check_lambda(lambda);
  if (costs.size() != p) throw ShapeError("oracle: cost vector length != p");
  std::vector<double> sums(1ull << p, 0.0);
  accumulate_distances(page_view, model, sums);
  return pick_best(sums, 1, costs, lambda, page_view.factors.n_items(), p);
}

OracleResult exhaustive_best_pooled(const Dataset& dataset,
                                    const RankingModel& model,
                                    const CostVector& costs, double lambda) {
  check_cap(dataset.p, kDatasetCap, "oracle (pooled)");
  check_lambda(lambda);
  if (dataset.page_views.empty()) throw ValueError("oracle: empty dataset");
  std::vector<double> sums(1ull << dataset.p, 0.0);
  for (const PageView& pv : dataset.page_views) {
    accumulate_distances(pv, model, sums);
  }
  return pick_best(sums, dataset.page_views.size(), costs, lambda,
                   dataset.n_items, dataset.p);
}

std::map<std::int32_t, OracleResult> exhaustive_best_per_cluster(
    const Dataset& dataset, const RankingModel& model, const CostVector& costs,
    double lambda) {
  check_cap(dataset.p, kDatasetCap, "oracle (per cluster)");
  check_lambda(lambda);
  if (dataset.page_views.empty()) throw ValueError("oracle: empty dataset");

  std::map<std::int32_t, std::vector<double>> sums;
  std::map<std::int32_t, std::uint64_t> counts;
  for (const PageView& pv : dataset.page_views) {
    const std::int32_t cluster = pv.context.cluster_id;
    if (cluster < 0) {
      throw ValueError("oracle: page view without a cluster tag");
    }
    auto [it, inserted] = sums.try_emplace(cluster);
    if (inserted) it->second.assign(1ull << dataset.p, 0.0);
    accumulate_distances(pv, model, it->second);
    ++counts[cluster];
  }

  std::map<std::int32_t, OracleResult> results;
  for (const auto& [cluster, cluster_sums] : sums) {
    results.emplace(cluster,
                    pick_best(cluster_sums, counts[cluster], costs, lambda,
                              dataset.n_items, dataset.p));
  }
  return results;
}

}  // namespace cfs

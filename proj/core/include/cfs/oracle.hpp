#pragma once

#include <cstdint>
#include <map>

#include "cfs/dataset.hpp"
#include "cfs/ranking.hpp"

namespace cfs {

/// Result of enumerating all 2^p masks. Ties resolve to the mask with the
/// fewest kept factors, then the lexicographically smallest bit string.
struct OracleResult {
  FactorMask best_mask{std::vector<std::uint8_t>{}};
  double best_loss = 0.0;
  double best_distance = 0.0;
  double best_cost = 0.0;  // n_items * kept cost, averaged where applicable
  std::uint64_t evaluated_count = 0;
};

/// Exhaustive minimizer of distance + lambda * cost over every factor
/// subset of one page view. Walks masks in Gray-code order so each step
/// touches one factor's score contribution. Refuses p > 22.
OracleResult exhaustive_best_mask(const PageView& page_view,
                                  const RankingModel& model,
                                  const CostVector& costs, double lambda);

/// Best single mask for the whole dataset by mean loss. Refuses p > 16.
OracleResult exhaustive_best_pooled(const Dataset& dataset,
                                    const RankingModel& model,
                                    const CostVector& costs, double lambda);

/// Best mask per context cluster by mean loss over that cluster's page
/// views. Requires every page view to carry a cluster tag. Refuses p > 16.
std::map<std::int32_t, OracleResult> exhaustive_best_per_cluster(
    const Dataset& dataset, const RankingModel& model, const CostVector& costs,
    double lambda);

}  // namespace cfs

#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "cfs/ranking.hpp"

namespace cfs {

/// User-query embedding plus the generator's latent regime tag. The tag is
/// bookkeeping for oracle grouping and tests; policies must only read the
/// embedding.
struct ContextVector {
  std::vector<double> embedding;
  std::int32_t cluster_id = -1;

  bool operator==(const ContextVector&) const = default;
};

/// One logged search request: context, item factor matrix and the request's
/// weight vector.
struct PageView {
  ContextVector context;
  FactorMatrix factors;
  std::vector<double> weights;

  bool operator==(const PageView&) const = default;
};

struct Dataset {
  std::vector<PageView> page_views;
  CostVector costs;
  std::uint32_t p = 0;
  std::uint32_t l = 0;
  std::uint32_t n_items = 0;
  std::uint32_t num_clusters = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return page_views.size(); }

  bool operator==(const Dataset&) const = default;
};

/// Knobs for the synthetic page-view generator.
///
/// Factors come from a latent-source model: a few shared latent variables
/// are mixed into all p observed factors, with idiosyncratic noise weighted
/// by (1 - correlation_strength), so the observed factor correlation is
/// directly controllable. Each cluster has a designated effective factor
/// subset; weights outside it contribute almost nothing to the score, so the
/// cost-optimal mask differs between clusters. Factor scales are spread over
/// a wide log grid, which decouples a weight's magnitude from its ranking
/// influence the way heterogeneous production factors do.
struct GenConfig {
  std::size_t num_page_views = 10000;
  std::uint32_t p = 20;
  std::uint32_t l = 16;
  std::uint32_t n_items = 10;
  std::uint32_t num_clusters = 2;
  double correlation_strength = 0.3;  // in [0, 1]
  double cost_log_location = -5.8;    // log-normal location of factor costs
  double cost_log_scale = 0.6;        // log-normal scale of factor costs
  std::uint64_t seed = 1;

  void validate() const;
};

Dataset generate(const GenConfig& config);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Positional split into a leading train part and trailing test part.
/// Both sides must be non-empty.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double fraction);

/// Scoring model over the dataset's per-request weight vectors, keyed by
/// each page view's request id.
RankingModel make_ranking_model(const Dataset& dataset);

}  // namespace cfs

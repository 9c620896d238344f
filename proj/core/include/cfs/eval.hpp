#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cfs/dataset.hpp"
#include "cfs/ranking.hpp"

namespace cfs {

/// One comparison-table row.
struct EvalRow {
  std::string name;
  double avg_pairwise_loss = 0.0;
  double avg_factor_usage = 0.0;
  double weighted_factor_usage = 0.0;
  double mean_latency = 0.0;
  double p99_latency = 0.0;

  bool operator==(const EvalRow&) const = default;
};

/// Per-page-view measurements behind an EvalRow.
struct PageViewTrace {
  double distance = 0.0;
  double usage = 0.0;
  double weighted_usage = 0.0;  // kept cost sum
};

struct EvalResult {
  EvalRow row;
  std::vector<PageViewTrace> traces;
};

/// Produces the mask a policy applies to one page view; index is the page
/// view's position in the evaluated dataset.
using MaskProducer =
    std::function<FactorMask(std::size_t index, const PageView&)>;

EvalResult evaluate_policy(const Dataset& test, const RankingModel& model,
                           const CostVector& costs, const std::string& name,
                           const MaskProducer& producer);

struct LatencySimConfig {
  double overhead_ms = 0.05;       // fixed per-request overhead
  double cost_to_latency = 1.0;    // scale from cost units to latency units
  double traffic_multiplier = 1.0;  // load scaling on the compute term

  void validate() const;
};

struct LatencySummary {
  double mean = 0.0;
  double p99 = 0.0;  // nearest-rank percentile
};

/// Per page view, latency = overhead + multiplier * scale * kept_cost * n_items.
LatencySummary simulate_latency(std::span<const PageViewTrace> traces,
                                std::size_t n_items,
                                const LatencySimConfig& config);

/// Aligned text comparison table over the given rows.
std::string render_report(std::span<const EvalRow> rows);

/// Per-page-view series as CSV: page_view, pairwise_loss, factor_usage,
/// weighted_usage.
std::string render_series_csv(std::span<const PageViewTrace> traces);

void save_report(const std::filesystem::path& path,
                 std::span<const EvalRow> rows);
std::vector<EvalRow> load_report(const std::filesystem::path& path);

}  // namespace cfs

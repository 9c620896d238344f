#include "cfs/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace cfs {

EvalResult evaluate_policy(const Dataset& test, const RankingModel& model,
                           const CostVector& costs, const std::string& name,
                           const MaskProducer& producer) {
  if (test.page_views.empty()) {
    throw ValueError("evaluate: empty test set");
  }
  EvalResult result;
  result.row.name = name;
  result.traces.reserve(test.page_views.size());
  double sum_distance = 0.0;
  double sum_usage = 0.0;
  double sum_weighted = 0.0;
  for (std::size_t i = 0; i < test.page_views.size(); ++i) {
    const PageView& pv = test.page_views[i];
    const FactorMask mask = producer(i, pv);
    if (mask.size() != pv.factors.p()) {
      throw ShapeError("evaluate: mask length " + std::to_string(mask.size()) +
                       " != p " + std::to_string(pv.factors.p()));
    }
    const std::vector<double> full = score_items(
        model, pv.factors.request_id(), pv.factors, FactorMask::ones(mask.size()));
    const std::vector<double> masked =
        score_items(model, pv.factors.request_id(), pv.factors, mask);
    PageViewTrace trace;
    trace.distance = pairwise_distance(rank(full), rank(masked));
    trace.usage = static_cast<double>(mask.count());
    for (std::size_t k = 0; k < mask.size(); ++k) {
      if (mask.test(k)) trace.weighted_usage += costs[k];
    }
    sum_distance += trace.distance;
    sum_usage += trace.usage;
    sum_weighted += trace.weighted_usage;
    result.traces.push_back(trace);
  }
  const double denom = static_cast<double>(test.page_views.size());
  result.row.avg_pairwise_loss = sum_distance / denom;
  result.row.avg_factor_usage = sum_usage / denom;
  result.row.weighted_factor_usage = sum_weighted / denom;
  return result;
}

void LatencySimConfig::validate() const {
  if (!(overhead_ms >= 0.0) || !(cost_to_latency > 0.0) ||
      !(traffic_multiplier > 0.0)) {
    throw ConfigError(
        "latency sim: overhead must be >= 0, scale and multiplier > 0");
  }
}

LatencySummary simulate_latency(std::span<const PageViewTrace> traces,
                                std::size_t n_items,
                                const LatencySimConfig& config) {
  config.validate();
  if (traces.empty()) throw ValueError("latency sim: no traces");
  std::vector<double> latencies(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    latencies[i] = config.overhead_ms +
                   config.traffic_multiplier * config.cost_to_latency *
                       traces[i].weighted_usage * static_cast<double>(n_items);
  }
  LatencySummary summary;
  double sum = 0.0;
  for (double lat : latencies) sum += lat;
  summary.mean = sum / static_cast<double>(latencies.size());
  std::sort(latencies.begin(), latencies.end());
  const auto rank_idx = static_cast<std::size_t>(
      std::ceil(0.99 * static_cast<double>(latencies.size())));
  summary.p99 = latencies[std::max<std::size_t>(rank_idx, 1) - 1];
  return summary;
}

std::string render_report(std::span<const EvalRow> rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %14s %14s %16s %14s %14s\n",
                "algorithm", "avg_pair_loss", "avg_usage", "weighted_usage",
                "mean_latency", "p99_latency");
  out += line;
  out += std::string(out.size() - 1, '-') + "\n";
  for (const EvalRow& row : rows) {
    std::snprintf(line, sizeof(line),
                  "%-24s %14.4f %14.4f %16.4f %14.4f %14.4f\n",
                  row.name.c_str(), row.avg_pairwise_loss,
                  row.avg_factor_usage, row.weighted_factor_usage,
                  row.mean_latency, row.p99_latency);
    out += line;
  }
  return out;
}

std::string render_series_csv(std::span<const PageViewTrace> traces) {
  std::string out = "page_view,pairwise_loss,factor_usage,weighted_usage\n";
  char line[128];
  for (std::size_t i = 0; i < traces.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu,%.10g,%.10g,%.10g\n", i,
                  traces[i].distance, traces[i].usage,
                  traces[i].weighted_usage);
    out += line;
  }
  return out;
}

void save_report(const std::filesystem::path& path,
                 std::span<const EvalRow> rows) {
  nlohmann::json doc;
  doc["rows"] = nlohmann::json::array();
  for (const EvalRow& row : rows) {
    doc["rows"].push_back({{"name", row.name},
                           {"avg_pairwise_loss", row.avg_pairwise_loss},
                           {"avg_factor_usage", row.avg_factor_usage},
                           {"weighted_factor_usage", row.weighted_factor_usage},
                           {"mean_latency", row.mean_latency},
                           {"p99_latency", row.p99_latency}});
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << doc.dump(2) << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<EvalRow> load_report(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("report: " + std::string(e.what()));
  }
  if (!doc.contains("rows") || !doc["rows"].is_array()) {
    throw FormatError("report: missing rows array");
  }
  std::vector<EvalRow> rows;
  for (const auto& item : doc["rows"]) {
    try {
      EvalRow row;
      row.name = item.at("name").get<std::string>();
      row.avg_pairwise_loss = item.at("avg_pairwise_loss").get<double>();
      row.avg_factor_usage = item.at("avg_factor_usage").get<double>();
      row.weighted_factor_usage =
          item.at("weighted_factor_usage").get<double>();
      row.mean_latency = item.at("mean_latency").get<double>();
      row.p99_latency = item.at("p99_latency").get<double>();
      rows.push_back(std::move(row));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("report: " + std::string(e.what()));
    }
  }
  return rows;
}

}  // namespace cfs

#include "cfs/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "binary_io.hpp"
#include "cfs/rng.hpp"

namespace cfs {

namespace {

constexpr char kMagic[] = "CFSDATA";
constexpr std::uint32_t kFormatVersion = 1;

// Spread of per-factor value scales. Wide on purpose: a factor's weight
// magnitude then says nothing about its ranking influence.
constexpr double kScaleMin = 0.05;
constexpr double kScaleMax = 20.0;

constexpr std::size_t kLatentDims = 3;
constexpr double kEffectiveLo = 0.8;   // effective-factor contribution range
constexpr double kEffectiveHi = 1.2;
constexpr double kIneffectiveSigma = 0.01;  // near-zero contribution spread
constexpr double kWeightJitterSigma = 0.01;
constexpr double kContextSeparation = 3.0;
constexpr double kContextSigma = 1.0;

std::size_t effective_subset_size(std::uint32_t p, std::uint32_t clusters) {
  auto e = static_cast<std::size_t>(
      std::lround(static_cast<double>(p) / (2.0 * clusters)));
  e = std::max<std::size_t>(e, 2);
  e = std::min<std::size_t>(e, p / clusters);
  return std::max<std::size_t>(e, 1);
}

}  // namespace

void GenConfig::validate() const {
  if (num_page_views == 0) throw ConfigError("gen: num_page_views must be > 0");
  if (p < 2) throw ConfigError("gen: p must be >= 2");
  if (l == 0) throw ConfigError("gen: l must be > 0");
  if (n_items < 2) throw ConfigError("gen: n_items must be >= 2");
  if (num_clusters == 0) throw ConfigError("gen: num_clusters must be > 0");
  if (num_clusters > p) throw ConfigError("gen: num_clusters must be <= p");
  if (!(correlation_strength >= 0.0 && correlation_strength <= 1.0)) {
    throw ConfigError("gen: correlation_strength must be in [0, 1]");
  }
  if (!std::isfinite(cost_log_location)) {
    throw ConfigError("gen: cost_log_location must be finite");
  }
  if (!(cost_log_scale >= 0.0) || !std::isfinite(cost_log_scale)) {
    throw ConfigError("gen: cost_log_scale must be finite and >= 0");
  }
}

Dataset generate(const GenConfig& config) {
  config.validate();
  Rng rng(config.seed);

  const std::size_t p = config.p;
  const std::size_t l = config.l;
  const std::size_t clusters = config.num_clusters;

  // Per-factor value scales on a shuffled log grid. The grid (rather than
  // i.i.d. draws) guarantees both very small and very large scales appear.
  std::vector<double> scale(p);
  for (std::size_t k = 0; k < p; ++k) {
    const double t = p > 1 ? static_cast<double>(k) / (p - 1) : 0.0;
    scale[k] = kScaleMin * std::pow(kScaleMax / kScaleMin, t);
  }
  for (std::size_t k = p; k > 1; --k) {
    std::swap(scale[k - 1], scale[rng.uniform_int(k)]);
  }

  // Latent mixing directions, one unit vector per factor.
  std::vector<std::array<double, kLatentDims>> mix(p);
  for (std::size_t k = 0; k < p; ++k) {
    double norm = 0.0;
    for (double& m : mix[k]) {
      m = rng.normal();
      norm += m * m;
    }
    norm = std::sqrt(norm);
    for (double& m : mix[k]) m /= norm > 0 ? norm : 1.0;
  }

  // Per-cluster context means and base factor contributions. Factors inside
  // the cluster's effective block contribute O(1) to an item's score;
  // the rest contribute O(kIneffectiveSigma).
  const std::size_t block = effective_subset_size(config.p, config.num_clusters);
  std::vector<std::vector<double>> context_mean(clusters,
                                                std::vector<double>(l));
  std::vector<std::vector<double>> contribution(clusters,
                                                std::vector<double>(p));
  for (std::size_t c = 0; c < clusters; ++c) {
    double norm = 0.0;
    for (double& m : context_mean[c]) {
      m = rng.normal();
      norm += m * m;
    }
    norm = std::sqrt(norm);
    for (double& m : context_mean[c]) {
      m *= kContextSeparation / (norm > 0 ? norm : 1.0);
    }
    const std::size_t lo = c * block;
    const std::size_t hi = std::min(lo + block, p);
    for (std::size_t k = 0; k < p; ++k) {
      if (k >= lo && k < hi) {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        contribution[c][k] = sign * rng.uniform(kEffectiveLo, kEffectiveHi);
      } else {
        contribution[c][k] = rng.normal(0.0, kIneffectiveSigma);
      }
    }
  }

  std::vector<double> costs(p);
  for (std::size_t k = 0; k < p; ++k) {
    costs[k] = rng.lognormal(config.cost_log_location, config.cost_log_scale);
  }

  const double rho = config.correlation_strength;
  const double mix_norm = std::sqrt(rho * rho + (1.0 - rho) * (1.0 - rho));

  Dataset dataset;
  dataset.costs = CostVector(costs);
  dataset.p = config.p;
  dataset.l = config.l;
  dataset.n_items = config.n_items;
  dataset.num_clusters = config.num_clusters;
  dataset.seed = config.seed;
  dataset.page_views.reserve(config.num_page_views);

  for (std::size_t i = 0; i < config.num_page_views; ++i) {
    const auto c = static_cast<std::size_t>(rng.uniform_int(clusters));

    ContextVector context;
    context.cluster_id = static_cast<std::int32_t>(c);
    context.embedding.resize(l);
    for (std::size_t d = 0; d < l; ++d) {
      context.embedding[d] = context_mean[c][d] + rng.normal(0.0, kContextSigma);
    }

    std::vector<double> weights(p);
    for (std::size_t k = 0; k < p; ++k) {
      weights[k] =
          (contribution[c][k] + rng.normal(0.0, kWeightJitterSigma)) / scale[k];
    }

    std::vector<double> values(config.n_items * p);
    for (std::size_t j = 0; j < config.n_items; ++j) {
      std::array<double, kLatentDims> z;
      for (double& zz : z) zz = rng.normal();
      for (std::size_t k = 0; k < p; ++k) {
        double latent = 0.0;
        for (std::size_t d = 0; d < kLatentDims; ++d) {
          latent += mix[k][d] * z[d];
        }
        const double raw = (rho * latent + (1.0 - rho) * rng.normal()) / mix_norm;
        values[j * p + k] = scale[k] * raw;
      }
    }

    dataset.page_views.push_back(PageView{
        std::move(context),
        FactorMatrix(static_cast<RequestId>(i), config.n_items, p,
                     std::move(values)),
        std::move(weights)});
  }
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  detail::write_bytes(os, kMagic, std::strlen(kMagic));
  detail::write_u32(os, kFormatVersion);
  detail::write_u32(os, dataset.p);
  detail::write_u32(os, dataset.l);
  detail::write_u32(os, dataset.n_items);
  detail::write_u32(os, dataset.num_clusters);
  detail::write_u64(os, dataset.seed);
  detail::write_u64(os, dataset.page_views.size());
  detail::write_f64_vec(os, dataset.costs.values());
  for (const PageView& pv : dataset.page_views) {
    detail::write_u64(os, static_cast<std::uint64_t>(pv.factors.request_id()));
    detail::write_i32(os, pv.context.cluster_id);
    detail::write_f64_vec(os, pv.context.embedding);
    detail::write_f64_vec(os, pv.weights);
    detail::write_f64_vec(os, pv.factors.values());
  }
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  detail::expect_magic(is, kMagic, "dataset");
  const std::uint32_t version = detail::read_u32(is, "dataset version");
  if (version != kFormatVersion) {
    throw FormatError("dataset: unsupported format version " +
                      std::to_string(version));
  }
  Dataset dataset;
  dataset.p = detail::read_u32(is, "dataset p");
  dataset.l = detail::read_u32(is, "dataset l");
  dataset.n_items = detail::read_u32(is, "dataset n_items");
  dataset.num_clusters = detail::read_u32(is, "dataset num_clusters");
  dataset.seed = detail::read_u64(is, "dataset seed");
  const std::uint64_t count = detail::read_u64(is, "dataset count");
  if (dataset.p == 0 || dataset.l == 0 || dataset.n_items < 2) {
    throw FormatError("dataset: invalid header dimensions");
  }
  if (count > (1ull << 32)) throw FormatError("dataset: count out of range");
  try {
    dataset.costs =
        CostVector(detail::read_f64_vec(is, dataset.p, "dataset costs"));
    dataset.page_views.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto request_id =
          static_cast<RequestId>(detail::read_u64(is, "page view request id"));
      ContextVector context;
      context.cluster_id = detail::read_i32(is, "page view cluster");
      context.embedding =
          detail::read_f64_vec(is, dataset.l, "page view context");
      std::vector<double> weights =
          detail::read_f64_vec(is, dataset.p, "page view weights");
      std::vector<double> values = detail::read_f64_vec(
          is, static_cast<std::size_t>(dataset.n_items) * dataset.p,
          "page view factors");
      dataset.page_views.push_back(
          PageView{std::move(context),
                   FactorMatrix(request_id, dataset.n_items, dataset.p,
                                std::move(values)),
                   std::move(weights)});
    }
  } catch (const ValueError& e) {
    // Payload contradicting the header means the file is corrupt.
    throw FormatError("dataset: " + std::string(e.what()));
  } catch (const ShapeError& e) {
    throw FormatError("dataset: " + std::string(e.what()));
  }
  is.peek();
  if (!is.eof()) throw FormatError("dataset: trailing bytes after payload");
  return dataset;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValueError("split: fraction must be in (0, 1)");
  }
  const std::size_t n = dataset.page_views.size();
  const auto n_train = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) {
    throw ValueError("split: fraction " + std::to_string(fraction) +
                     " leaves an empty side for " + std::to_string(n) +
                     " page views");
  }
  Dataset train = dataset;
  train.page_views.assign(dataset.page_views.begin(),
                          dataset.page_views.begin() + n_train);
  Dataset test = dataset;
  test.page_views.assign(dataset.page_views.begin() + n_train,
                         dataset.page_views.end());
  return {std::move(train), std::move(test)};
}

RankingModel make_ranking_model(const Dataset& dataset) {
  RankingModel model;
  for (const PageView& pv : dataset.page_views) {
    model.add(pv.factors.request_id(), pv.weights);
  }
  return model;
}

}  // namespace cfs

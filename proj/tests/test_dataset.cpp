#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cfs/dataset.hpp"
#include "cfs/oracle.hpp"
#include "support/reference.hpp"

using namespace cfs;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

// Mean absolute off-diagonal entry of the item-level factor correlation.
double mean_abs_offdiag_correlation(const Dataset& dataset) {
  const std::size_t p = dataset.p;
  std::size_t rows = 0;
  std::vector<double> mean(p, 0.0);
  for (const PageView& pv : dataset.page_views) {
    for (std::size_t j = 0; j < pv.factors.n_items(); ++j) {
      for (std::size_t k = 0; k < p; ++k) mean[k] += pv.factors.at(j, k);
      ++rows;
    }
  }
  for (double& m : mean) m /= static_cast<double>(rows);
  std::vector<double> cov(p * p, 0.0);
  for (const PageView& pv : dataset.page_views) {
    for (std::size_t j = 0; j < pv.factors.n_items(); ++j) {
      for (std::size_t a = 0; a < p; ++a) {
        const double da = pv.factors.at(j, a) - mean[a];
        for (std::size_t b = a; b < p; ++b) {
          cov[a * p + b] += da * (pv.factors.at(j, b) - mean[b]);
        }
      }
    }
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) {
      const double denom = std::sqrt(cov[a * p + a] * cov[b * p + b]);
      if (denom > 0.0) {
        total += std::abs(cov[a * p + b] / denom);
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("generation is deterministic per seed") {
  GenConfig config;
  config.num_page_views = 50;
  config.p = 6;
  config.l = 4;
  config.seed = 7;
  const Dataset a = generate(config);
  const Dataset b = generate(config);
  CHECK(a == b);
  config.seed = 8;
  CHECK(generate(config) != a);
}

TEST_CASE("zero correlation strength leaves factors uncorrelated") {
  GenConfig config;
  config.num_page_views = 10000;
  config.p = 8;
  config.l = 4;
  config.correlation_strength = 0.0;
  config.seed = 3;
  CHECK(mean_abs_offdiag_correlation(generate(config)) < 0.1);
}

TEST_CASE("factor correlation grows with correlation_strength") {
  GenConfig config;
  config.num_page_views = 2000;
  config.p = 8;
  config.l = 4;
  config.seed = 3;
  config.correlation_strength = 0.0;
  const double low = mean_abs_offdiag_correlation(generate(config));
  config.correlation_strength = 0.5;
  const double mid = mean_abs_offdiag_correlation(generate(config));
  config.correlation_strength = 0.9;
  const double high = mean_abs_offdiag_correlation(generate(config));
  CHECK(low < mid);
  CHECK(mid < high);
}

TEST_CASE("two clusters get distinct brute-force optimal masks") {
  GenConfig config;
  config.num_page_views = 200;
  config.p = 10;
  config.l = 6;
  config.num_clusters = 2;
  config.seed = 21;
  const Dataset dataset = generate(config);
  const RankingModel model = make_ranking_model(dataset);
  const auto per_cluster =
      exhaustive_best_per_cluster(dataset, model, dataset.costs, 0.9);
  REQUIRE(per_cluster.size() == 2);
  CHECK(per_cluster.at(0).best_mask != per_cluster.at(1).best_mask);
}

TEST_CASE("oracle drops at least one factor outside the effective subset") {
  GenConfig config;
  config.num_page_views = 60;
  config.p = 8;
  config.l = 4;
  config.num_clusters = 1;
  config.seed = 5;
  const Dataset dataset = generate(config);
  const RankingModel model = make_ranking_model(dataset);
  // With lambda large enough that cost always beats a small distortion, the
  // optimal mask cannot keep everything.
  const auto result =
      exhaustive_best_per_cluster(dataset, model, dataset.costs, 5.0);
  CHECK(result.at(0).best_mask.count() < config.p);
}

TEST_CASE("save / load round trip") {
  GenConfig config;
  config.num_page_views = 30;
  config.p = 5;
  config.l = 3;
  config.seed = 13;
  const Dataset dataset = generate(config);
  const auto path = temp_file("cfs_test_roundtrip.cfsd");
  save_dataset(dataset, path);
  const Dataset loaded = load_dataset(path);
  CHECK(loaded == dataset);
  std::filesystem::remove(path);
}

TEST_CASE("load rejects truncated and corrupted files") {
  GenConfig config;
  config.num_page_views = 10;
  config.p = 4;
  config.l = 3;
  const Dataset dataset = generate(config);
  const auto path = temp_file("cfs_test_corrupt.cfsd");
  save_dataset(dataset, path);

  SUBCASE("truncated") {
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size / 2);
    CHECK_THROWS_AS(load_dataset(path), FormatError);
  }
  SUBCASE("p mismatch vs payload") {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    const std::uint32_t wrong_p = 11;
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>(wrong_p >> (8 * i));
    f.seekp(11);  // p field: magic (7 bytes) + version (4 bytes)
    f.write(bytes, 4);
    f.close();
    CHECK_THROWS_AS(load_dataset(path), FormatError);
  }
  SUBCASE("bad magic") {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.write("XXXX", 4);
    f.close();
    CHECK_THROWS_AS(load_dataset(path), FormatError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("split is positional and validates the fraction") {
  GenConfig config;
  config.num_page_views = 100;
  config.p = 4;
  config.l = 3;
  const Dataset dataset = generate(config);

  const auto [train, test] = split(dataset, 0.5);
  CHECK(train.size() == 50);
  CHECK(test.size() == 50);
  CHECK(train.page_views.front() == dataset.page_views.front());
  CHECK(test.page_views.back() == dataset.page_views.back());
  CHECK(train.costs == dataset.costs);

  CHECK_THROWS_AS(split(dataset, 0.0), ValueError);
  CHECK_THROWS_AS(split(dataset, 1.0), ValueError);
}

TEST_CASE("degenerate split fraction is refused") {
  GenConfig config;
  config.num_page_views = 10;
  config.p = 4;
  config.l = 3;
  const Dataset dataset = generate(config);
  CHECK_THROWS_AS(split(dataset, 0.999), ValueError);
}

TEST_CASE("paper-scale split: 10000 page views -> 5000/5000") {
  GenConfig config;
  config.num_page_views = 10000;
  config.p = 4;
  config.l = 3;
  config.n_items = 10;
  const Dataset dataset = generate(config);
  const auto [train, test] = split(dataset, 0.5);
  CHECK(train.size() == 5000);
  CHECK(test.size() == 5000);
}

TEST_CASE("config validation") {
  GenConfig config;
  config.num_page_views = 0;
  CHECK_THROWS_AS(generate(config), ConfigError);
  config = GenConfig{};
  config.correlation_strength = 1.5;
  CHECK_THROWS_AS(generate(config), ConfigError);
  config = GenConfig{};
  config.n_items = 1;
  CHECK_THROWS_AS(generate(config), ConfigError);
}

}  // TEST_SUITE

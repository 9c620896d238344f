#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfs/dataset.hpp"
#include "cfs/ranking.hpp"

namespace cfs {

/// Supervised view of a dataset: one row per (page view, item) with the
/// full-factor score as the regression target.
struct RegressionSet {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;  // row-major, rows x cols
  std::vector<double> targets;

  double at(std::size_t row, std::size_t col) const {
    return x[row * cols + col];
  }
};

RegressionSet build_regression_set(const Dataset& dataset,
                                   const RankingModel& model);

/// Per-request masks: factor k kept for request i iff |w_k^i| >= epsilon.
/// One mask per page view, aligned with the dataset order.
std::vector<FactorMask> norm_elimination(const Dataset& dataset,
                                         double epsilon);

struct LassoResult {
  FactorMask mask{std::vector<std::uint8_t>{}};
  std::vector<double> coefficients;  // in the fitted (standardized) scale
  bool converged = false;
  std::size_t sweeps = 0;
};

/// Coordinate-descent Lasso on objective (1/2N)*||y - Xw||^2 + alpha*||w||_1.
/// Columns are standardized to zero mean and unit variance by default;
/// factors whose coefficients solve to exactly zero are dropped.
LassoResult lasso_select(const RegressionSet& data, double alpha,
                         bool standardize = true);

enum class TreeMaskMode : std::uint8_t {
  MeanImportance,  // keep factors with importance above the mean
  TopK,
};

struct TreeSelectParams {
  TreeMaskMode mode = TreeMaskMode::MeanImportance;
  std::size_t k = 0;  // used by TopK
  std::size_t num_trees = 50;
  std::size_t min_samples_split = 4;
  std::uint64_t seed = 9;
};

struct TreeResult {
  FactorMask mask{std::vector<std::uint8_t>{}};
  std::vector<double> importances;  // normalized, sums to 1
  bool degenerate = false;          // constant target, importances undefined
};

/// Extremely randomized regression trees: each node draws one uniform split
/// threshold per factor and keeps the best variance reduction. Importance is
/// each factor's total variance reduction across the forest.
TreeResult tree_select(const RegressionSet& data,
                       const TreeSelectParams& params);

struct FtestResult {
  FactorMask mask{std::vector<std::uint8_t>{}};
  std::vector<double> scores;
};

/// Univariate F scores, F = r^2 / (1 - r^2) * (N - 2); keeps the top k,
/// breaking ties toward the lower factor index.
FtestResult ftest_select(const RegressionSet& data, std::size_t k);

/// Text serialization of a selection result: a single global mask, or one
/// mask per evaluated page view for request-dependent methods.
struct MaskFile {
  std::string method;
  std::string params;  // free-form, e.g. "alpha=0.05"
  std::size_t p = 0;
  bool per_request = false;
  std::vector<FactorMask> masks;
};

void save_mask_file(const std::filesystem::path& path, const MaskFile& file);
MaskFile load_mask_file(const std::filesystem::path& path);

}  // namespace cfs

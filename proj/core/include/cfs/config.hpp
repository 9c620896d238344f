#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cfs/baselines.hpp"
#include "cfs/dataset.hpp"
#include "cfs/env.hpp"
#include "cfs/eval.hpp"
#include "cfs/policy.hpp"

namespace cfs {

struct BaselinesConfig {
  double norm_epsilon = 0.1;
  double lasso_alpha = 0.05;
  TreeSelectParams tree;
  std::size_t ftest_k = 8;
};

struct PathsConfig {
  std::string dataset;
  std::string checkpoint;
  std::string out;
};

/// Whole-pipeline configuration, parsed from one sectioned text file and
/// validated before any command does work.
struct RunConfig {
  GenConfig generation;
  EnvParams environment;
  TrainParams training;
  double train_fraction = 0.5;
  BaselinesConfig baselines;
  LatencySimConfig evaluation;
  PathsConfig paths;

  void validate() const;
};

/// Parses INI-style text: [section] headers, key=value lines, # or ;
/// comments. Unknown sections, unknown keys and malformed values are
/// reported with the source name and line number.
RunConfig parse_run_config_text(std::string_view text,
                                const std::string& source_name);

RunConfig parse_run_config(const std::filesystem::path& path);

}  // namespace cfs

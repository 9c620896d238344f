// Command-line driver for the contextual factor selection pipeline:
// synthetic data generation, policy training, static baselines, exhaustive
// oracle runs, off-line evaluation and report rendering.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfs/baselines.hpp"
#include "cfs/config.hpp"
#include "cfs/dataset.hpp"
#include "cfs/eval.hpp"
#include "cfs/oracle.hpp"
#include "cfs/policy.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string dataset_path;
  std::string checkpoint_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

cfs::RunConfig load_config(const CommonArgs& args) {
  if (args.config_path.empty()) {
    throw cfs::ConfigError("--config is required");
  }
  cfs::RunConfig config = cfs::parse_run_config(args.config_path);
  if (args.seed_set) {
    config.generation.seed = args.seed;
    config.training.seed = args.seed;
  }
  return config;
}

std::string resolve_path(const std::string& flag_value,
                         const std::string& config_value, const char* name) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  throw cfs::ConfigError(std::string("missing required path: ") + name);
}

cfs::Dataset load_dataset_checked(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw cfs::IoError("dataset file not found: " + path);
  }
  return cfs::load_dataset(path);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw cfs::IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw cfs::IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const CommonArgs& args) {
  const cfs::RunConfig config = load_config(args);
  const std::string out =
      resolve_path(args.out_path, config.paths.dataset, "--out");
  const cfs::Dataset dataset = cfs::generate(config.generation);
  cfs::save_dataset(dataset, out);
  std::printf("wrote %s (%zu page views, p=%u, l=%u, n_items=%u)\n",
              out.c_str(), dataset.size(), dataset.p, dataset.l,
              dataset.n_items);
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const cfs::RunConfig config = load_config(args);
  const std::string dataset_path =
      resolve_path(args.dataset_path, config.paths.dataset, "--dataset");
  const std::string out =
      resolve_path(args.out_path, config.paths.checkpoint, "--out");
  const cfs::Dataset dataset = load_dataset_checked(dataset_path);
  const auto [train_split, test_split] = cfs::split(dataset, config.train_fraction);
  const cfs::RankingModel model = cfs::make_ranking_model(train_split);

  cfs::Trainer trainer(dataset.l, dataset.p, config.environment,
                       config.training);
  const std::filesystem::path checkpoint_path(out);
  trainer.run(train_split, model, dataset.costs, checkpoint_path);
  trainer.save(checkpoint_path);
  write_text(out + ".log", trainer.log().to_text());
  std::printf("trained %llu episodes; checkpoint %s; log %s.log\n",
              static_cast<unsigned long long>(trainer.episodes_done()),
              out.c_str(), out.c_str());
  return 0;
}

int cmd_baseline(const CommonArgs& args, const std::string& method) {
  const cfs::RunConfig config = load_config(args);
  const std::string dataset_path =
      resolve_path(args.dataset_path, config.paths.dataset, "--dataset");
  const std::string out = resolve_path(args.out_path, "", "--out");
  const cfs::Dataset dataset = load_dataset_checked(dataset_path);
  const auto [train_split, test_split] =
      cfs::split(dataset, config.train_fraction);

  cfs::MaskFile file;
  file.method = method;
  file.p = dataset.p;
  char params[64] = {0};
  if (method == "norm") {
    std::snprintf(params, sizeof(params), "epsilon=%g",
                  config.baselines.norm_epsilon);
    file.method = "norm_elimination";
    file.per_request = true;
    file.masks = cfs::norm_elimination(test_split, config.baselines.norm_epsilon);
  } else {
    const cfs::RankingModel model = cfs::make_ranking_model(train_split);
    const cfs::RegressionSet set =
        cfs::build_regression_set(train_split, model);
    if (method == "lasso") {
      std::snprintf(params, sizeof(params), "alpha=%g",
                    config.baselines.lasso_alpha);
      const cfs::LassoResult result =
          cfs::lasso_select(set, config.baselines.lasso_alpha);
      if (!result.converged) {
        std::fprintf(stderr,
                     "warning: lasso did not converge in %zu sweeps; using "
                     "the final iterate\n",
                     result.sweeps);
      }
      file.masks = {result.mask};
    } else if (method == "tree") {
      std::snprintf(params, sizeof(params), "trees=%zu",
                    config.baselines.tree.num_trees);
      const cfs::TreeResult result =
          cfs::tree_select(set, config.baselines.tree);
      if (result.degenerate) {
        std::fprintf(stderr,
                     "warning: constant targets, tree importances are "
                     "undefined; emitting an empty mask\n");
      }
      file.masks = {result.mask};
    } else if (method == "ftest") {
      std::snprintf(params, sizeof(params), "k=%zu", config.baselines.ftest_k);
      file.masks = {cfs::ftest_select(set, config.baselines.ftest_k).mask};
    } else {
      throw cfs::ConfigError("unknown baseline method '" + method +
                             "' (expected norm|lasso|tree|ftest)");
    }
  }
  file.params = params;
  cfs::save_mask_file(out, file);
  if (file.per_request) {
    std::printf("wrote %s (%zu per-request masks)\n", out.c_str(),
                file.masks.size());
  } else {
    std::printf("wrote %s (mask %s, %zu factors kept)\n", out.c_str(),
                file.masks.front().to_string().c_str(),
                file.masks.front().count());
  }
  return 0;
}

int cmd_oracle(const CommonArgs& args) {
  const cfs::RunConfig config = load_config(args);
  const std::string dataset_path =
      resolve_path(args.dataset_path, config.paths.dataset, "--dataset");
  const std::string out = resolve_path(args.out_path, "", "--out");
  const cfs::Dataset dataset = load_dataset_checked(dataset_path);
  const auto [train_split, test_split] =
      cfs::split(dataset, config.train_fraction);
  const cfs::RankingModel model = cfs::make_ranking_model(test_split);
  const double lambda = config.environment.lambda;

  const cfs::OracleResult pooled =
      cfs::exhaustive_best_pooled(test_split, model, dataset.costs, lambda);
  const auto per_cluster = cfs::exhaustive_best_per_cluster(
      test_split, model, dataset.costs, lambda);

  std::string text = "cfs-oracle v1\n";
  char line[256];
  std::snprintf(line, sizeof(line), "lambda %.10g\np %u\nn_items %u\n", lambda,
                dataset.p, dataset.n_items);
  text += line;
  std::snprintf(line, sizeof(line),
                "pooled mask=%s loss=%.10g distance=%.10g cost=%.10g\n",
                pooled.best_mask.to_string().c_str(), pooled.best_loss,
                pooled.best_distance, pooled.best_cost);
  text += line;
  for (const auto& [cluster, result] : per_cluster) {
    std::snprintf(line, sizeof(line),
                  "cluster=%d mask=%s loss=%.10g distance=%.10g cost=%.10g\n",
                  cluster, result.best_mask.to_string().c_str(),
                  result.best_loss, result.best_distance, result.best_cost);
    text += line;
  }
  write_text(out, text);
  std::printf("%s", text.c_str());
  return 0;
}

int cmd_evaluate(const CommonArgs& args,
                 const std::vector<std::string>& mask_files) {
  const cfs::RunConfig config = load_config(args);
  const std::string dataset_path =
      resolve_path(args.dataset_path, config.paths.dataset, "--dataset");
  const std::string out_dir = resolve_path(args.out_path, config.paths.out, "--out");
  const cfs::Dataset dataset = load_dataset_checked(dataset_path);
  const auto [train_split, test_split] =
      cfs::split(dataset, config.train_fraction);
  const cfs::RankingModel model = cfs::make_ranking_model(test_split);

  std::filesystem::create_directories(out_dir);
  std::filesystem::create_directories(std::filesystem::path(out_dir) /
                                      "series");

  std::vector<cfs::EvalResult> results;
  results.push_back(cfs::evaluate_policy(
      test_split, model, dataset.costs, "all_factors",
      [&](std::size_t, const cfs::PageView& pv) {
        return cfs::FactorMask::ones(pv.factors.p());
      }));

  const std::string checkpoint_path = !args.checkpoint_path.empty()
                                          ? args.checkpoint_path
                                          : config.paths.checkpoint;
  if (!checkpoint_path.empty()) {
    const cfs::Trainer trainer = cfs::Trainer::load(checkpoint_path);
    if (trainer.factor_count() != dataset.p ||
        trainer.context_dim() != dataset.l) {
      throw cfs::ShapeError(
          "checkpoint dims (l=" + std::to_string(trainer.context_dim()) +
          ", p=" + std::to_string(trainer.factor_count()) +
          ") do not match dataset (l=" + std::to_string(dataset.l) +
          ", p=" + std::to_string(dataset.p) + ")");
    }
    results.push_back(cfs::evaluate_policy(
        test_split, model, dataset.costs, "rankcfs",
        [&](std::size_t, const cfs::PageView& pv) {
          return trainer.greedy_mask(pv, model, dataset.costs);
        }));
  }

  for (const std::string& mask_path : mask_files) {
    const cfs::MaskFile file = cfs::load_mask_file(mask_path);
    if (file.p != dataset.p) {
      throw cfs::ShapeError("mask file " + mask_path + " has p=" +
                            std::to_string(file.p) + ", dataset has p=" +
                            std::to_string(dataset.p));
    }
    if (file.per_request && file.masks.size() != test_split.size()) {
      throw cfs::ShapeError(
          "mask file " + mask_path + " carries " +
          std::to_string(file.masks.size()) + " masks but the test split has " +
          std::to_string(test_split.size()) + " page views");
    }
    const std::string name = std::filesystem::path(mask_path).stem().string();
    results.push_back(cfs::evaluate_policy(
        test_split, model, dataset.costs, name,
        [&](std::size_t index, const cfs::PageView&) {
          return file.per_request ? file.masks[index] : file.masks.front();
        }));
  }

  std::vector<cfs::EvalRow> rows;
  for (cfs::EvalResult& result : results) {
    const cfs::LatencySummary latency = cfs::simulate_latency(
        result.traces, dataset.n_items, config.evaluation);
    result.row.mean_latency = latency.mean;
    result.row.p99_latency = latency.p99;
    rows.push_back(result.row);
    write_text(std::filesystem::path(out_dir) / "series" /
                   (result.row.name + ".csv"),
               cfs::render_series_csv(result.traces));
  }

  const std::string table = cfs::render_report(rows);
  cfs::save_report(std::filesystem::path(out_dir) / "report.json", rows);
  write_text(std::filesystem::path(out_dir) / "report.txt", table);
  std::printf("%s", table.c_str());
  return 0;
}

int cmd_report(const std::vector<std::string>& report_files,
               const std::string& out_path) {
  std::vector<cfs::EvalRow> rows;
  for (const std::string& path : report_files) {
    const auto loaded = cfs::load_report(path);
    rows.insert(rows.end(), loaded.begin(), loaded.end());
  }
  const std::string table = cfs::render_report(rows);
  if (!out_path.empty()) write_text(out_path, table);
  std::printf("%s", table.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual factor selection for ranking: training, baselines "
               "and off-line evaluation"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string method;
  std::vector<std::string> positional_files;

  const auto add_common = [&](CLI::App* cmd, bool with_dataset) {
    cmd->add_option("--config", args.config_path, "Run configuration file");
    if (with_dataset) {
      cmd->add_option("--dataset", args.dataset_path, "Dataset file");
    }
    cmd->add_option("--out", args.out_path, "Output path");
    cmd->add_option("--seed", args.seed, "Seed override")
        ->each([&](const std::string&) { args.seed_set = true; });
  };

  CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  add_common(gen, false);

  CLI::App* train = app.add_subcommand("train", "Train the selection policy");
  add_common(train, true);

  CLI::App* baseline =
      app.add_subcommand("baseline", "Fit a static feature-selection baseline");
  add_common(baseline, true);
  baseline->add_option("--method", method, "norm|lasso|tree|ftest")
      ->required();

  CLI::App* oracle =
      app.add_subcommand("oracle", "Exhaustive best-mask search");
  add_common(oracle, true);

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Evaluate policies on the test split");
  add_common(evaluate, true);
  evaluate->add_option("--checkpoint", args.checkpoint_path,
                       "Trained policy checkpoint");
  evaluate->add_option("masks", positional_files, "Baseline mask files");

  CLI::App* report = app.add_subcommand("report", "Merge evaluation reports");
  report->add_option("reports", positional_files, "report.json files")
      ->required();
  report->add_option("--out", args.out_path, "Rendered table output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(args);
    if (train->parsed()) return cmd_train(args);
    if (baseline->parsed()) return cmd_baseline(args, method);
    if (oracle->parsed()) return cmd_oracle(args);
    if (evaluate->parsed()) return cmd_evaluate(args, positional_files);
    if (report->parsed()) return cmd_report(positional_files, args.out_path);
  } catch (const cfs::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: unexpected: %s\n", e.what());
    return 1;
  }
  return 0;
}

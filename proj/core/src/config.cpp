#include "cfs/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace cfs {

namespace {

struct Cursor {
  const std::string& source;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError(source + ":" + std::to_string(line) + ": " + message);
  }
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double(const Cursor& cur, std::string_view key,
                    std::string_view value) {
  char* end = nullptr;
  const std::string buf(value);
  const double parsed = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || buf.empty()) {
    cur.fail("key '" + std::string(key) + "': expected a number, got '" +
             buf + "'");
  }
  return parsed;
}

std::uint64_t parse_u64(const Cursor& cur, std::string_view key,
                        std::string_view value) {
  std::uint64_t parsed = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    cur.fail("key '" + std::string(key) +
             "': expected a non-negative integer, got '" + std::string(value) +
             "'");
  }
  return parsed;
}

std::vector<std::size_t> parse_size_list(const Cursor& cur,
                                         std::string_view key,
                                         std::string_view value) {
  std::vector<std::size_t> sizes;
  std::size_t start = 0;
  const std::string buf(value);
  while (start <= buf.size()) {
    const std::size_t comma = buf.find(',', start);
    const std::string_view item = trim(
        std::string_view(buf).substr(start, comma == std::string::npos
                                                ? std::string::npos
                                                : comma - start));
    if (!item.empty()) {
      sizes.push_back(static_cast<std::size_t>(parse_u64(cur, key, item)));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return sizes;
}

}  // namespace

void RunConfig::validate() const {
  generation.validate();
  environment.validate();
  training.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("training.train_fraction must be in (0, 1)");
  }
  if (!(baselines.norm_epsilon > 0.0)) {
    throw ConfigError("baselines.norm_epsilon must be > 0");
  }
  if (!(baselines.lasso_alpha >= 0.0)) {
    throw ConfigError("baselines.lasso_alpha must be >= 0");
  }
  if (baselines.ftest_k == 0 || baselines.ftest_k > generation.p) {
    throw ConfigError("baselines.ftest_k must be in [1, p]");
  }
  if (baselines.tree.mode == TreeMaskMode::TopK &&
      (baselines.tree.k == 0 || baselines.tree.k > generation.p)) {
    throw ConfigError("baselines.tree_k must be in [1, p] in topk mode");
  }
  evaluation.validate();
}

RunConfig parse_run_config_text(std::string_view text,
                                const std::string& source_name) {
  RunConfig config;
  Cursor cur{source_name, 0};
  std::string section;
  bool global_seed_set = false;
  std::uint64_t global_seed = 0;
  bool gen_seed_set = false;
  bool train_seed_set = false;

  std::istringstream stream{std::string(text)};
  std::string raw;
  while (std::getline(stream, raw)) {
    ++cur.line;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']') cur.fail("unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "generation" && section != "environment" &&
          section != "training" && section != "baselines" &&
          section != "evaluation" && section != "paths") {
        cur.fail("unknown section '" + section + "'");
      }
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      cur.fail("expected key=value, got '" + std::string(line) + "'");
    }
    const std::string key{trim(line.substr(0, eq))};
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) cur.fail("empty key");

    if (section.empty()) {
      if (key == "seed") {
        global_seed = parse_u64(cur, key, value);
        global_seed_set = true;
      } else {
        cur.fail("key '" + key + "' outside any section");
      }
    } else if (section == "generation") {
      GenConfig& gen = config.generation;
      if (key == "num_page_views") {
        gen.num_page_views = static_cast<std::size_t>(parse_u64(cur, key, value));
      } else if (key == "p") {
        gen.p = static_cast<std::uint32_t>(parse_u64(cur, key, value));
      } else if (key == "l") {
        gen.l = static_cast<std::uint32_t>(parse_u64(cur, key, value));
      } else if (key == "n_items") {
        gen.n_items = static_cast<std::uint32_t>(parse_u64(cur, key, value));
      } else if (key == "num_clusters") {
        gen.num_clusters =
            static_cast<std::uint32_t>(parse_u64(cur, key, value));
      } else if (key == "correlation_strength") {
        gen.correlation_strength = parse_double(cur, key, value);
      } else if (key == "cost_log_location") {
        gen.cost_log_location = parse_double(cur, key, value);
      } else if (key == "cost_log_scale") {
        gen.cost_log_scale = parse_double(cur, key, value);
      } else if (key == "seed") {
        gen.seed = parse_u64(cur, key, value);
        gen_seed_set = true;
      } else {
        cur.fail("unknown key '" + key + "' in section 'generation'");
      }
    } else if (section == "environment") {
      EnvParams& env = config.environment;
      if (key == "lambda") {
        env.lambda = parse_double(cur, key, value);
      } else if (key == "beta") {
        env.beta = parse_double(cur, key, value);
      } else if (key == "r_c") {
        env.r_c = parse_double(cur, key, value);
      } else if (key == "gamma") {
        env.gamma = parse_double(cur, key, value);
      } else if (key == "reward_mode") {
        if (value == "shaped") {
          env.reward_mode = RewardMode::Shaped;
        } else if (value == "terminal") {
          env.reward_mode = RewardMode::Terminal;
        } else {
          cur.fail("reward_mode must be 'shaped' or 'terminal'");
        }
      } else if (key == "visit_order") {
        if (value == "ascending") {
          env.visit_order = VisitOrder::AscendingIndex;
        } else if (value == "cost_descending") {
          env.visit_order = VisitOrder::DescendingCost;
        } else {
          cur.fail("visit_order must be 'ascending' or 'cost_descending'");
        }
      } else {
        cur.fail("unknown key '" + key + "' in section 'environment'");
      }
    } else if (section == "training") {
      TrainParams& train = config.training;
      if (key == "t_max") {
        train.t_max = parse_u64(cur, key, value);
      } else if (key == "entropy_coefficient") {
        train.entropy_coefficient = parse_double(cur, key, value);
      } else if (key == "seed") {
        train.seed = parse_u64(cur, key, value);
        train_seed_set = true;
      } else if (key == "checkpoint_every") {
        train.checkpoint_every = parse_u64(cur, key, value);
      } else if (key == "hidden") {
        train.hidden = parse_size_list(cur, key, value);
      } else if (key == "actor_lr") {
        train.actor_lr = parse_double(cur, key, value);
      } else if (key == "critic_lr") {
        train.critic_lr = parse_double(cur, key, value);
      } else if (key == "log_interval") {
        train.log_interval = parse_u64(cur, key, value);
      } else if (key == "train_fraction") {
        config.train_fraction = parse_double(cur, key, value);
      } else {
        cur.fail("unknown key '" + key + "' in section 'training'");
      }
    } else if (section == "baselines") {
      BaselinesConfig& base = config.baselines;
      if (key == "norm_epsilon") {
        base.norm_epsilon = parse_double(cur, key, value);
      } else if (key == "lasso_alpha") {
        base.lasso_alpha = parse_double(cur, key, value);
      } else if (key == "tree_mode") {
        if (value == "mean") {
          base.tree.mode = TreeMaskMode::MeanImportance;
        } else if (value == "topk") {
          base.tree.mode = TreeMaskMode::TopK;
        } else {
          cur.fail("tree_mode must be 'mean' or 'topk'");
        }
      } else if (key == "tree_k") {
        base.tree.k = static_cast<std::size_t>(parse_u64(cur, key, value));
      } else if (key == "tree_trees") {
        base.tree.num_trees =
            static_cast<std::size_t>(parse_u64(cur, key, value));
      } else if (key == "tree_seed") {
        base.tree.seed = parse_u64(cur, key, value);
      } else if (key == "ftest_k") {
        base.ftest_k = static_cast<std::size_t>(parse_u64(cur, key, value));
      } else {
        cur.fail("unknown key '" + key + "' in section 'baselines'");
      }
    } else if (section == "evaluation") {
      LatencySimConfig& lat = config.evaluation;
      if (key == "latency_overhead") {
        lat.overhead_ms = parse_double(cur, key, value);
      } else if (key == "cost_to_latency") {
        lat.cost_to_latency = parse_double(cur, key, value);
      } else if (key == "traffic_multiplier") {
        lat.traffic_multiplier = parse_double(cur, key, value);
      } else {
        cur.fail("unknown key '" + key + "' in section 'evaluation'");
      }
    } else if (section == "paths") {
      if (key == "dataset") {
        config.paths.dataset = std::string(value);
      } else if (key == "checkpoint") {
        config.paths.checkpoint = std::string(value);
      } else if (key == "out") {
        config.paths.out = std::string(value);
      } else {
        cur.fail("unknown key '" + key + "' in section 'paths'");
      }
    }
  }

  if (global_seed_set) {
    if (!gen_seed_set) config.generation.seed = global_seed;
    if (!train_seed_set) config.training.seed = global_seed;
  }
  config.validate();
  return config;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return parse_run_config_text(buffer.str(), path.filename().string());
}

}  // namespace cfs

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cfs/dataset.hpp"
#include "cfs/env.hpp"
#include "cfs/mlp.hpp"
#include "cfs/rng.hpp"

namespace cfs {

struct TrainParams {
  std::uint64_t t_max = 50000;        // episodes to run in total
  double entropy_coefficient = 0.0;   // optional exploration bonus
  std::uint64_t seed = 1;
  std::uint64_t checkpoint_every = 0;  // 0 = only on demand
  std::vector<std::size_t> hidden = {128, 128};
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  std::uint64_t log_interval = 1000;

  void validate() const;
};

/// Actor action distribution for one state: {P(Skip), P(Keep)}.
std::array<double, 2> actor_probs(const Mlp& actor, const EnvState& state);

double critic_value(const Mlp& critic, const EnvState& state);

/// d/dtheta log pi(action | input). Output index 0 is Skip, 1 is Keep.
std::vector<double> log_policy_gradient(const Mlp& actor,
                                        std::span<const double> input,
                                        Action action);

/// d/dmu V(input).
std::vector<double> value_gradient(const Mlp& critic,
                                   std::span<const double> input);

struct PgParams {
  double gamma = 1.0;
  double entropy_coefficient = 0.0;
};

/// Advantage policy-gradient update over one episode: walks transitions
/// backward accumulating the discounted return and applies one Adam step to
/// the actor and one to the critic per transition.
void policy_gradient_step(Mlp& actor, Mlp& critic, const Episode& episode,
                          Adam& actor_opt, Adam& critic_opt,
                          const PgParams& params);

struct LogRecord {
  std::uint64_t episode = 0;
  double mean_loss = 0.0;
  double mean_distance = 0.0;
  double mean_usage = 0.0;

  bool operator==(const LogRecord&) const = default;
};

struct TrainingLog {
  std::vector<LogRecord> records;

  std::string to_text() const;  // line-delimited, with header

  bool operator==(const TrainingLog&) const = default;
};

/// Single-writer training loop: iterates page views as episodes, samples
/// actions from the actor, and updates both networks after every episode.
/// Fully deterministic under a fixed seed.
class Trainer {
 public:
  Trainer(std::size_t l, std::size_t p, EnvParams env_params,
          TrainParams train_params);

  /// Runs episodes until the lifetime episode count reaches t_max, cycling
  /// through the page views in order. Appends to the training log.
  const TrainingLog& run(const Dataset& train_data, const RankingModel& model,
                         const CostVector& costs,
                         const std::optional<std::filesystem::path>&
                             checkpoint_path = std::nullopt);

  /// Deterministic evaluation-time mask: argmax action at every step,
  /// Keep on ties.
  FactorMask greedy_mask(const PageView& page_view, const RankingModel& model,
                         const CostVector& costs) const;

  void save(const std::filesystem::path& path) const;
  static Trainer load(const std::filesystem::path& path);

  /// Raises (or lowers) the lifetime episode budget; used when resuming a
  /// checkpoint under a larger t_max.
  void set_episode_budget(std::uint64_t t_max) { train_params_.t_max = t_max; }

  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  std::uint64_t episodes_done() const { return episodes_done_; }
  const TrainingLog& log() const { return log_; }
  std::size_t context_dim() const { return l_; }
  std::size_t factor_count() const { return p_; }
  const EnvParams& env_params() const { return env_params_; }
  const TrainParams& train_params() const { return train_params_; }

 private:
  Trainer(std::size_t l, std::size_t p, EnvParams env_params,
          TrainParams train_params, Mlp actor, Mlp critic, Adam actor_opt,
          Adam critic_opt, Rng rng);
  static Trainer make_new(std::size_t l, std::size_t p, EnvParams env_params,
                          TrainParams train_params);

  std::size_t l_;
  std::size_t p_;
  EnvParams env_params_;
  TrainParams train_params_;
  Mlp actor_;
  Mlp critic_;
  Adam actor_opt_;
  Adam critic_opt_;
  Rng rng_;
  std::uint64_t episodes_done_ = 0;
  TrainingLog log_;
  // Accumulators for the next log record; persisted so a resumed run logs
  // identically to an uninterrupted one.
  double window_loss_ = 0.0;
  double window_distance_ = 0.0;
  double window_usage_ = 0.0;
  std::uint64_t window_count_ = 0;

  friend struct TrainerSerializer;
};

}  // namespace cfs

#include "cfs/policy.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "binary_io.hpp"

namespace cfs {

namespace {

constexpr char kMagic[] = "CFSCKPT";
constexpr std::uint32_t kCheckpointVersion = 1;

MlpShape actor_shape(std::size_t l, std::size_t p,
                     const std::vector<std::size_t>& hidden) {
  MlpShape shape;
  shape.sizes.push_back(l + p + 1);
  shape.sizes.insert(shape.sizes.end(), hidden.begin(), hidden.end());
  shape.sizes.push_back(2);
  return shape;
}

MlpShape critic_shape(std::size_t l, std::size_t p,
                      const std::vector<std::size_t>& hidden) {
  MlpShape shape;
  shape.sizes.push_back(l + p + 1);
  shape.sizes.insert(shape.sizes.end(), hidden.begin(), hidden.end());
  shape.sizes.push_back(1);
  return shape;
}

std::vector<double> state_input(const Mlp& net, const EnvState& state) {
  std::vector<double> input = state.to_vector();
  if (input.size() != net.shape().input()) {
    throw ShapeError("policy: state dimension " +
                     std::to_string(input.size()) + " != network input " +
                     std::to_string(net.shape().input()));
  }
  return input;
}

}  // namespace

void TrainParams::validate() const {
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) {
    throw ConfigError("train: learning rates must be > 0");
  }
  if (entropy_coefficient < 0.0) {
    throw ConfigError("train: entropy_coefficient must be >= 0");
  }
  if (log_interval == 0) throw ConfigError("train: log_interval must be > 0");
}

std::array<double, 2> actor_probs(const Mlp& actor, const EnvState& state) {
  const std::vector<double> input = state_input(actor, state);
  const std::vector<double> logits = actor.forward(input);
  if (logits.size() != 2) {
    throw ShapeError("policy: actor must have 2 outputs");
  }
  const std::vector<double> probs = softmax(logits);
  return {probs[0], probs[1]};
}

double critic_value(const Mlp& critic, const EnvState& state) {
  const std::vector<double> input = state_input(critic, state);
  const std::vector<double> out = critic.forward(input);
  if (out.size() != 1) {
    throw ShapeError("policy: critic must have 1 output");
  }
  return out[0];
}

std::vector<double> log_policy_gradient(const Mlp& actor,
                                        std::span<const double> input,
                                        Action action) {
  Mlp::Trace trace;
  const std::vector<double> logits = actor.forward(input, trace);
  const std::vector<double> probs = softmax(logits);
  const std::size_t a = action == Action::Keep ? 1 : 0;
  std::vector<double> dlogits(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    dlogits[i] = (i == a ? 1.0 : 0.0) - probs[i];
  }
  return actor.backward(trace, dlogits);
}

std::vector<double> value_gradient(const Mlp& critic,
                                   std::span<const double> input) {
  Mlp::Trace trace;
  critic.forward(input, trace);
  const std::vector<double> one{1.0};
  return critic.backward(trace, one);
}

void policy_gradient_step(Mlp& actor, Mlp& critic, const Episode& episode,
                          Adam& actor_opt, Adam& critic_opt,
                          const PgParams& params) {
  double ret = 0.0;
  for (std::size_t k = episode.transitions.size(); k-- > 0;) {
    const Transition& tr = episode.transitions[k];
    ret = tr.reward + params.gamma * ret;

    const std::vector<double> input = state_input(actor, tr.state);

    Mlp::Trace critic_trace;
    const double value = critic.forward(input, critic_trace)[0];
    const double advantage = ret - value;
    if (!std::isfinite(advantage)) {
      throw TrainingError("policy gradient: non-finite advantage at step " +
                          std::to_string(k));
    }

    Mlp::Trace actor_trace;
    const std::vector<double> logits = actor.forward(input, actor_trace);
    const std::vector<double> probs = softmax(logits);
    const std::size_t a = tr.action == Action::Keep ? 1 : 0;
    std::vector<double> dlogits(2);
    for (std::size_t i = 0; i < 2; ++i) {
      dlogits[i] = advantage * ((i == a ? 1.0 : 0.0) - probs[i]);
    }
    if (params.entropy_coefficient != 0.0) {
      const std::vector<double> logp = log_softmax(logits);
      const double entropy = -(probs[0] * logp[0] + probs[1] * logp[1]);
      for (std::size_t i = 0; i < 2; ++i) {
        dlogits[i] -=
            params.entropy_coefficient * probs[i] * (logp[i] + entropy);
      }
    }
    if (!std::isfinite(dlogits[0]) || !std::isfinite(dlogits[1])) {
      throw TrainingError("policy gradient: non-finite actor gradient");
    }
    actor_opt.apply(actor.params(), actor.backward(actor_trace, dlogits));

    const std::vector<double> dvalue{advantage};
    critic_opt.apply(critic.params(), critic.backward(critic_trace, dvalue));
  }
}

std::string TrainingLog::to_text() const {
  std::string out = "episode mean_loss mean_distance mean_usage\n";
  char line[160];
  for (const LogRecord& r : records) {
    std::snprintf(line, sizeof(line), "%llu %.10g %.10g %.10g\n",
                  static_cast<unsigned long long>(r.episode), r.mean_loss,
                  r.mean_distance, r.mean_usage);
    out += line;
  }
  return out;
}

Trainer Trainer::make_new(std::size_t l, std::size_t p, EnvParams env_params,
                          TrainParams train_params) {
  env_params.validate();
  train_params.validate();
  Rng rng(train_params.seed);
  Mlp actor = Mlp::init(actor_shape(l, p, train_params.hidden), rng);
  Mlp critic = Mlp::init(critic_shape(l, p, train_params.hidden), rng);
  Adam actor_opt(actor.params().size(),
                 AdamParams{.lr = train_params.actor_lr});
  Adam critic_opt(critic.params().size(),
                  AdamParams{.lr = train_params.critic_lr});
  return Trainer(l, p, env_params, std::move(train_params), std::move(actor),
                 std::move(critic), std::move(actor_opt),
                 std::move(critic_opt), rng);
}

Trainer::Trainer(std::size_t l, std::size_t p, EnvParams env_params,
                 TrainParams train_params)
    : Trainer(make_new(l, p, env_params, std::move(train_params))) {}

Trainer::Trainer(std::size_t l, std::size_t p, EnvParams env_params,
                 TrainParams train_params, Mlp actor, Mlp critic,
                 Adam actor_opt, Adam critic_opt, Rng rng)
    : l_(l),
      p_(p),
      env_params_(env_params),
      train_params_(std::move(train_params)),
      actor_(std::move(actor)),
      critic_(std::move(critic)),
      actor_opt_(std::move(actor_opt)),
      critic_opt_(std::move(critic_opt)),
      rng_(rng) {}

const TrainingLog& Trainer::run(
    const Dataset& train_data, const RankingModel& model,
    const CostVector& costs,
    const std::optional<std::filesystem::path>& checkpoint_path) {
  if (train_data.l != l_ || train_data.p != p_) {
    throw ShapeError("trainer: dataset dims (l=" +
                     std::to_string(train_data.l) + ", p=" +
                     std::to_string(train_data.p) +
                     ") do not match networks (l=" + std::to_string(l_) +
                     ", p=" + std::to_string(p_) + ")");
  }
  if (train_data.page_views.empty()) {
    throw ValueError("trainer: empty training set");
  }
  const PgParams pg{env_params_.gamma, train_params_.entropy_coefficient};
  const PolicyFn sampler = [this](const EnvState& state) {
    const std::array<double, 2> probs = actor_probs(actor_, state);
    return rng_.uniform() < probs[1] ? Action::Keep : Action::Skip;
  };

  while (episodes_done_ < train_params_.t_max) {
    const PageView& pv =
        train_data.page_views[episodes_done_ % train_data.page_views.size()];
    const Episode episode = rollout(pv, sampler, model, costs, env_params_);
    policy_gradient_step(actor_, critic_, episode, actor_opt_, critic_opt_,
                         pg);
    ++episodes_done_;

    window_loss_ += episode.final_loss.loss;
    window_distance_ += episode.final_loss.distance;
    window_usage_ += static_cast<double>(episode.final_mask.count());
    ++window_count_;
    if (window_count_ == train_params_.log_interval) {
      const double denom = static_cast<double>(window_count_);
      const LogRecord record{episodes_done_, window_loss_ / denom,
                             window_distance_ / denom, window_usage_ / denom};
      if (!std::isfinite(record.mean_loss)) {
        throw TrainingError("trainer: diverged (mean loss is not finite) at "
                            "episode " +
                            std::to_string(episodes_done_));
      }
      log_.records.push_back(record);
      window_loss_ = window_distance_ = window_usage_ = 0.0;
      window_count_ = 0;
    }
    if (checkpoint_path && train_params_.checkpoint_every > 0 &&
        episodes_done_ % train_params_.checkpoint_every == 0) {
      save(*checkpoint_path);
    }
  }
  return log_;
}

FactorMask Trainer::greedy_mask(const PageView& page_view,
                                const RankingModel& model,
                                const CostVector& costs) const {
  const PolicyFn greedy = [this](const EnvState& state) {
    const std::array<double, 2> probs = actor_probs(actor_, state);
    return probs[1] >= probs[0] ? Action::Keep : Action::Skip;
  };
  return rollout(page_view, greedy, model, costs, env_params_).final_mask;
}

// ---------------------------------------------------------------------------
// Checkpointing

struct TrainerSerializer {
  static void save(const Trainer& t, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    detail::write_bytes(os, kMagic, std::strlen(kMagic));
    detail::write_u32(os, kCheckpointVersion);
    detail::write_u32(os, static_cast<std::uint32_t>(t.l_));
    detail::write_u32(os, static_cast<std::uint32_t>(t.p_));

    detail::write_f64(os, t.env_params_.lambda);
    detail::write_f64(os, t.env_params_.beta);
    detail::write_f64(os, t.env_params_.r_c);
    detail::write_f64(os, t.env_params_.gamma);
    detail::write_u32(os, static_cast<std::uint32_t>(t.env_params_.reward_mode));
    detail::write_u32(os, static_cast<std::uint32_t>(t.env_params_.visit_order));

    detail::write_u64(os, t.train_params_.t_max);
    detail::write_f64(os, t.train_params_.entropy_coefficient);
    detail::write_u64(os, t.train_params_.seed);
    detail::write_u64(os, t.train_params_.checkpoint_every);
    detail::write_u64(os, t.train_params_.hidden.size());
    for (std::size_t h : t.train_params_.hidden) detail::write_u64(os, h);
    detail::write_f64(os, t.train_params_.actor_lr);
    detail::write_f64(os, t.train_params_.critic_lr);
    detail::write_u64(os, t.train_params_.log_interval);

    detail::write_u64(os, t.episodes_done_);
    detail::write_f64(os, t.window_loss_);
    detail::write_f64(os, t.window_distance_);
    detail::write_f64(os, t.window_usage_);
    detail::write_u64(os, t.window_count_);

    write_net(os, t.actor_, t.actor_opt_);
    write_net(os, t.critic_, t.critic_opt_);
    detail::write_string(os, t.rng_.state());
    os.flush();
    if (!os) throw IoError("write failed for " + path.string());
  }

  static Trainer load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    try {
      detail::expect_magic(is, kMagic, "checkpoint");
    } catch (const FormatError& e) {
      throw CheckpointError(e.what());
    }
    const std::uint32_t version = detail::read_u32(is, "checkpoint version");
    if (version != kCheckpointVersion) {
      throw CheckpointError("checkpoint: unsupported version " +
                            std::to_string(version));
    }
    const std::uint32_t l = detail::read_u32(is, "checkpoint l");
    const std::uint32_t p = detail::read_u32(is, "checkpoint p");

    EnvParams env;
    env.lambda = detail::read_f64(is, "env lambda");
    env.beta = detail::read_f64(is, "env beta");
    env.r_c = detail::read_f64(is, "env r_c");
    env.gamma = detail::read_f64(is, "env gamma");
    env.reward_mode =
        static_cast<RewardMode>(detail::read_u32(is, "env reward mode"));
    env.visit_order =
        static_cast<VisitOrder>(detail::read_u32(is, "env visit order"));

    TrainParams train;
    train.t_max = detail::read_u64(is, "train t_max");
    train.entropy_coefficient = detail::read_f64(is, "train entropy");
    train.seed = detail::read_u64(is, "train seed");
    train.checkpoint_every = detail::read_u64(is, "train cadence");
    const std::uint64_t hidden_count = detail::read_u64(is, "hidden count");
    if (hidden_count > 64) throw CheckpointError("checkpoint: hidden count");
    train.hidden.resize(hidden_count);
    for (std::uint64_t i = 0; i < hidden_count; ++i) {
      train.hidden[i] = detail::read_u64(is, "hidden size");
    }
    train.actor_lr = detail::read_f64(is, "actor lr");
    train.critic_lr = detail::read_f64(is, "critic lr");
    train.log_interval = detail::read_u64(is, "log interval");

    const std::uint64_t episodes_done = detail::read_u64(is, "episodes");
    const double window_loss = detail::read_f64(is, "window loss");
    const double window_distance = detail::read_f64(is, "window distance");
    const double window_usage = detail::read_f64(is, "window usage");
    const std::uint64_t window_count = detail::read_u64(is, "window count");

    Mlp actor(actor_shape(l, p, train.hidden));
    Adam actor_opt(actor.params().size(), AdamParams{.lr = train.actor_lr});
    read_net(is, actor, actor_opt, "actor");
    Mlp critic(critic_shape(l, p, train.hidden));
    Adam critic_opt(critic.params().size(), AdamParams{.lr = train.critic_lr});
    read_net(is, critic, critic_opt, "critic");

    Rng rng(train.seed);
    rng.restore(detail::read_string(is, "rng state"));

    Trainer t(l, p, env, std::move(train), std::move(actor), std::move(critic),
              std::move(actor_opt), std::move(critic_opt), rng);
    t.episodes_done_ = episodes_done;
    t.window_loss_ = window_loss;
    t.window_distance_ = window_distance;
    t.window_usage_ = window_usage;
    t.window_count_ = window_count;
    return t;
  }

 private:
  static void write_net(std::ostream& os, const Mlp& net, const Adam& opt) {
    detail::write_u64(os, net.params().size());
    for (double x : net.params()) detail::write_f64(os, x);
    detail::write_u64(os, opt.steps());
    detail::write_f64_vec(os, opt.m());
    detail::write_f64_vec(os, opt.v());
  }

  static void read_net(std::istream& is, Mlp& net, Adam& opt,
                       const char* what) {
    const std::uint64_t n = detail::read_u64(is, what);
    if (n != net.params().size()) {
      throw CheckpointError(std::string("checkpoint: ") + what +
                            " parameter count " + std::to_string(n) +
                            " does not match shape (" +
                            std::to_string(net.params().size()) + ")");
    }
    for (double& x : net.params()) x = detail::read_f64(is, what);
    opt.set_steps(detail::read_u64(is, what));
    opt.m() = detail::read_f64_vec(is, n, what);
    opt.v() = detail::read_f64_vec(is, n, what);
  }
};

void Trainer::save(const std::filesystem::path& path) const {
  TrainerSerializer::save(*this, path);
}

Trainer Trainer::load(const std::filesystem::path& path) {
  return TrainerSerializer::load(path);
}

}  // namespace cfs

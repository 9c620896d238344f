#include "cfs/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cfs {

void EnvParams::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("env: lambda must be finite and > 0");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw ConfigError("env: beta must be in (0, 1)");
  }
  if (!(r_c > 0.0) || !std::isfinite(r_c)) {
    throw ConfigError("env: r_c must be finite and > 0");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ConfigError("env: gamma must be in (0, 1]");
  }
}

std::vector<double> EnvState::to_vector() const {
  std::vector<double> v;
  v.reserve(dimension());
  v.insert(v.end(), context.begin(), context.end());
  v.push_back(p() > 0 ? static_cast<double>(step) / static_cast<double>(p())
                      : 0.0);
  for (std::uint8_t b : decision_memory) v.push_back(static_cast<double>(b));
  return v;
}

Env::Env(const PageView& page_view, const RankingModel& model,
         const CostVector& costs, const EnvParams& params)
    : page_view_(&page_view),
      model_(&model),
      costs_(&costs),
      params_(params) {
  params_.validate();
  const std::size_t p = page_view.factors.p();
  if (costs.size() != p) {
    throw ShapeError("env: cost vector length " + std::to_string(costs.size()) +
                     " != p " + std::to_string(p));
  }
  visit_.resize(p);
  std::iota(visit_.begin(), visit_.end(), 0u);
  if (params_.visit_order == VisitOrder::DescendingCost) {
    std::stable_sort(visit_.begin(), visit_.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return costs[a] > costs[b];
                     });
  }
  const std::vector<double> full_scores =
      score_items(model, page_view.factors.request_id(), page_view.factors,
                  FactorMask::ones(p));
  full_perm_ = rank(full_scores);
}

EnvState Env::reset() const {
  EnvState state;
  state.context = page_view_->context.embedding;
  state.step = 0;
  state.decision_memory.assign(page_view_->factors.p(), 1);
  return state;
}

double Env::masked_distance(const std::vector<std::uint8_t>& bits) const {
  const std::vector<double> scores =
      score_items(*model_, page_view_->factors.request_id(),
                  page_view_->factors, FactorMask(bits));
  return pairwise_distance(full_perm_, rank(scores));
}

LossBreakdown Env::loss_of(const FactorMask& mask) const {
  return cfs_loss(page_view_->factors, *model_, *costs_, mask,
                  CfsLossParams(params_.lambda));
}

std::tuple<EnvState, double, bool> Env::step(const EnvState& state,
                                             Action action) const {
  const std::size_t p = page_view_->factors.p();
  if (state.step >= p) {
    throw StateError("env: episode already finished");
  }
  if (state.decision_memory.size() != p ||
      state.context.size() != page_view_->context.embedding.size()) {
    throw ShapeError("env: state dimensions do not match the page view");
  }

  EnvState next = state;
  const std::size_t factor = visit_[state.step];
  next.decision_memory[factor] = action == Action::Keep ? 1 : 0;
  next.step = state.step + 1;
  const bool done = next.step == p;

  double reward = 0.0;
  if (params_.reward_mode == RewardMode::Shaped) {
    const double n_items = static_cast<double>(page_view_->factors.n_items());
    const double efficiency =
        action == Action::Keep ? -params_.lambda * n_items * (*costs_)[factor]
                               : 0.0;
    const double effectiveness =
        masked_distance(next.decision_memory) > params_.beta ? -params_.r_c
                                                             : 0.0;
    reward = effectiveness + efficiency;
  } else if (done) {
    reward = -loss_of(FactorMask(next.decision_memory)).loss;
  }
  return {std::move(next), reward, done};
}

Episode rollout(const PageView& page_view, const PolicyFn& policy,
                const RankingModel& model, const CostVector& costs,
                const EnvParams& params) {
  const Env env(page_view, model, costs, params);
  Episode episode;
  episode.transitions.reserve(page_view.factors.p());
  EnvState state = env.reset();
  bool done = false;
  while (!done) {
    const Action action = policy(state);
    auto [next, reward, finished] = env.step(state, action);
    episode.transitions.push_back(
        Transition{std::move(state), action, reward, next});
    state = std::move(next);
    done = finished;
  }
  episode.final_mask = FactorMask(state.decision_memory);
  episode.final_loss = env.loss_of(episode.final_mask);
  return episode;
}

}  // namespace cfs

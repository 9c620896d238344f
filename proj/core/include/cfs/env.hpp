#pragma once

#include <cstdint>
#include <functional>
#include <tuple>
#include <vector>

#include "cfs/dataset.hpp"
#include "cfs/ranking.hpp"

namespace cfs {

enum class Action : std::uint8_t { Skip = 0, Keep = 1 };

enum class RewardMode : std::uint8_t {
  Terminal,  // zero reward until the last step, then -loss
  Shaped,    // per-step cost penalty plus threshold penalty on distortion
};

enum class VisitOrder : std::uint8_t {
  AscendingIndex,  // factor 0, 1, ..., p-1
  DescendingCost,  // most expensive factor first
};

struct EnvParams {
  double lambda = 0.9;
  double beta = 0.05;  // distortion threshold for the shaped penalty
  double r_c = 1.0;    // constant penalty when distortion exceeds beta
  double gamma = 1.0;  // return discount
  RewardMode reward_mode = RewardMode::Shaped;
  VisitOrder visit_order = VisitOrder::AscendingIndex;

  void validate() const;
};

/// State after k decisions: the request context, the normalized step index
/// and the working indicator (decided prefix, all-ones suffix).
struct EnvState {
  std::vector<double> context;
  std::uint32_t step = 0;
  std::vector<std::uint8_t> decision_memory;

  std::size_t p() const { return decision_memory.size(); }
  std::size_t dimension() const { return context.size() + p() + 1; }

  /// Network input layout: [context..., step/p, decision_memory...].
  std::vector<double> to_vector() const;

  bool operator==(const EnvState&) const = default;
};

struct Transition {
  EnvState state;
  Action action = Action::Skip;
  double reward = 0.0;
  EnvState next_state;
};

struct Episode {
  std::vector<Transition> transitions;
  FactorMask final_mask{std::vector<std::uint8_t>{}};
  LossBreakdown final_loss{0.0, 0.0, 0.0};

  std::size_t length() const { return transitions.size(); }
};

/// Sequential Skip/Keep decision process over one page view's factors.
/// The environment is immutable; the full-factor permutation is computed
/// once at construction since it does not depend on the decisions.
class Env {
 public:
  Env(const PageView& page_view, const RankingModel& model,
      const CostVector& costs, const EnvParams& params);

  EnvState reset() const;

  /// Applies one decision. Returns the successor state, the reward and
  /// whether the episode is finished.
  std::tuple<EnvState, double, bool> step(const EnvState& state,
                                          Action action) const;

  /// Factor index decided at the given step.
  std::size_t factor_at(std::size_t step) const { return visit_[step]; }

  const Permutation& full_permutation() const { return full_perm_; }
  const PageView& page_view() const { return *page_view_; }
  const EnvParams& params() const { return params_; }

  LossBreakdown loss_of(const FactorMask& mask) const;

 private:
  double masked_distance(const std::vector<std::uint8_t>& bits) const;

  const PageView* page_view_;
  const RankingModel* model_;
  const CostVector* costs_;
  EnvParams params_;
  std::vector<std::uint32_t> visit_;
  Permutation full_perm_;
};

using PolicyFn = std::function<Action(const EnvState&)>;

/// Runs one full episode under the given action policy.
Episode rollout(const PageView& page_view, const PolicyFn& policy,
                const RankingModel& model, const CostVector& costs,
                const EnvParams& params);

}  // namespace cfs

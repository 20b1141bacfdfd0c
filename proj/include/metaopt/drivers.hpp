// Copyright 2026 The metaopt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "metaopt/core.hpp"
#include "metaopt/meta_learner.hpp"
#include "metaopt/optimism_bmg.hpp"
#include "metaopt/problems.hpp"
#include "metaopt/trajectory.hpp"
#include "metaopt/update_rules.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <string>

namespace metaopt {

/// How x_t is formed from phi.
enum class IterateForm {
  Averaged,  ///< x_t = phi(xbar_{t-1}, w_t), xbar_t the alpha-weighted running average
  Additive,  ///< x_t = x_{t-1} + phi(x_{t-1}, w_t), no averaging (xbar_t = x_t)
};

struct ConvexOptions {
  IterateForm form = IterateForm::Averaged;
  /// Multiply g_t by rho_t, as the chain rule through the averaging step would.
  bool chain_rule_rho = false;
  /// Comparator for the meta regret ledger; zero when absent.
  std::optional<Vector> meta_comparator;
  double divergence_threshold = kDivergenceThreshold;
};

namespace detail {

inline void init_trajectory(Trajectory& traj, const std::string& driver, const Objective& objective,
                            const UpdateRule& rule, WeightKind weights, const Vector& xbar0,
                            const Vector& w1, const Vector& anchor, const Vector& comparator) {
  traj.driver = driver;
  traj.rule = rule.kind;
  traj.weights = weights;
  traj.xbar0 = xbar0;
  traj.w1 = w1;
  traj.meta_anchor = anchor;
  traj.meta_comparator = comparator;
  traj.x_star = objective.minimizer();
  traj.f_star = objective.min_value().value_or(kNaN);
  traj.smoothness = objective.smoothness().value_or(kNaN);
}

inline double learner_regret_term(const Trajectory& traj, const StepRecord& r) {
  if (!traj.x_star) return 0.0;
  return r.alpha * r.grad.dot(r.x - *traj.x_star);
}

inline Trajectory run_ftrl_loop(const std::string& driver, const Objective& objective,
                                const UpdateRule& rule, const WeightSchedule& weights,
                                MetaLearnerState meta, const HintPolicy* policy, int horizon,
                                const Vector& xbar0, const Vector& w1,
                                const ConvexOptions& options) {
  if (horizon < 1) throw std::invalid_argument(driver + ": T must be >= 1");
  if (objective.dim() != rule.param_dim) throw DimensionError(driver + ": objective/rule dims");
  if (meta.dim() != rule.meta_dim) throw DimensionError(driver + ": meta-learner/rule dims");
  require_dim(xbar0, rule.param_dim, "xbar0");
  require_dim(w1, rule.meta_dim, "w1");
  meta.divergence_threshold = options.divergence_threshold;

  const Vector comparator = options.meta_comparator.value_or(Vector::Zero(rule.meta_dim));
  Trajectory traj;
  init_trajectory(traj, driver, objective, rule, weights.kind(), xbar0, w1, meta.anchor,
                  comparator);
  traj.steps.reserve(static_cast<std::size_t>(horizon));

  RegretLedger ledger(comparator);
  Vector xbar = xbar0;
  Vector w = w1;
  Vector hint = Vector::Zero(rule.meta_dim);  // g~_1 = 0
  double regret_x = 0.0;

  for (int t = 1; t <= horizon; ++t) {
    StepRecord r;
    r.t = t;
    r.alpha = weights.alpha(t);
    r.alpha_prefix = weights.prefix(t);
    r.w = w;
    r.jac_point = xbar;
    r.hint = hint;
    const Vector step = apply(rule, objective, xbar, w);
    if (options.form == IterateForm::Averaged) {
      const double rho = weights.rho(t);
      r.x = step;
      r.xbar = (1.0 - rho) * xbar + rho * r.x;
    } else {
      r.x = xbar + step;
      r.xbar = r.x;
    }
    guard_divergence(r.x, t, "iterate", options.divergence_threshold);
    r.grad = objective.gradient(r.xbar);
    r.meta_grad = jtvp(rule, objective, r.jac_point, w, r.grad);
    if (options.chain_rule_rho && options.form == IterateForm::Averaged) {
      r.meta_grad *= weights.rho(t);
    }
    r.f_x = objective.value(r.x);
    r.f_xbar = objective.value(r.xbar);
    r.gap = suboptimality(objective, r.xbar);
    regret_x += learner_regret_term(traj, r);
    r.regret_x = regret_x;
    r.regret_w = ledger.update(r.alpha, r.meta_grad, w, hint);
    r.beta = meta.beta(t);
    traj.steps.push_back(r);

    if (policy != nullptr) {
      const HintContext ctx{objective, rule, weights, std::span<const StepRecord>(traj.steps)};
      Vector next = policy->next_hint(ctx);
      require_dim(next, rule.meta_dim, "hint");
      w = aoftrl_step(meta, r.meta_grad, next, r.alpha, weights.alpha(t + 1));
      hint = std::move(next);
    } else {
      w = ftrl_step(meta, r.meta_grad, r.alpha);
    }
    xbar = traj.steps.back().xbar;
  }
  return traj;
}

}  // namespace detail

/// Meta-learning with averaging and an FTRL meta-learner:
///   x_t = phi(xbar_{t-1}, w_t); xbar_t = (1 - rho_t) xbar_{t-1} + rho_t x_t;
///   g_t = D phi(xbar_{t-1}, w_t)^T grad f(xbar_t); w_{t+1} = FTRL step.
inline Trajectory run_convex(const Objective& objective, const UpdateRule& rule,
                             const WeightSchedule& weights, MetaLearnerState meta, int horizon,
                             const Vector& xbar0, const Vector& w1,
                             const ConvexOptions& options = {}) {
  return detail::run_ftrl_loop("convex", objective, rule, weights, std::move(meta), nullptr,
                               horizon, xbar0, w1, options);
}

/// As run_convex with an optimistic FTRL meta-learner fed by `hints`.
inline Trajectory run_optimistic(const Objective& objective, const UpdateRule& rule,
                                 const WeightSchedule& weights, MetaLearnerState meta,
                                 const HintPolicy& hints, int horizon, const Vector& xbar0,
                                 const Vector& w1, const ConvexOptions& options = {}) {
  return detail::run_ftrl_loop("optimistic", objective, rule, weights, std::move(meta), &hints,
                               horizon, xbar0, w1, options);
}

// ---- practical driver ------------------------------------------------------

enum class PracticalOptimism {
  None,
  /// Closed-form optimistic update for ElementwiseLR with beta on the current-gradient term only:
  ///   w_{t+1} = w_t - beta grad_t .* (grad_t + grad_{t-1}) - grad_{t-1} .* grad_{t-1}
  Literal,
  /// Error-corrected form with beta on both terms and y~_{t+1} = grad f(x_t):
  ///   w_{t+1} = w_t - beta D phi_t^T (2 grad_t) + beta D phi_{t-1}^T grad_{t-1}
  ErrorCorrected,
};

inline std::string_view to_string(PracticalOptimism o) {
  switch (o) {
    case PracticalOptimism::None: return "none";
    case PracticalOptimism::Literal: return "literal";
    case PracticalOptimism::ErrorCorrected: return "error_corrected";
  }
  return "?";
}

struct PracticalOptions {
  PracticalOptimism optimism = PracticalOptimism::None;
  /// Clamp w at zero after every meta-step.
  bool nonneg_w = false;
  /// Signed multiplier s on the update: x_t = x_{t-1} + s phi(x_{t-1}, w_t).
  /// The meta-gradient is scaled accordingly. s = 1 is the literal form.
  double step_scale = 1.0;
  std::optional<Vector> meta_comparator;
  double divergence_threshold = kDivergenceThreshold;
};

/// Online meta-learning without averaging, one meta-gradient step per iteration:
///   x_t = x_{t-1} + s phi(x_{t-1}, w_t)
///   w_{t+1} = w_t - beta_t s D phi(x_{t-1}, w_t)^T grad f(x_t)   [clamped if nonneg_w]
/// For ElementwiseLR with s = 1 the meta-step is w_t - beta grad f(x_{t-1}) .* grad f(x_t).
inline Trajectory run_practical(const Objective& objective, const UpdateRule& rule,
                                const BetaSchedule& beta, int horizon, const Vector& x0,
                                const Vector& w1, const PracticalOptions& options = {}) {
  if (horizon < 1) throw std::invalid_argument("practical: T must be >= 1");
  if (objective.dim() != rule.param_dim) throw DimensionError("practical: objective/rule dims");
  require_dim(x0, rule.param_dim, "x0");
  require_dim(w1, rule.meta_dim, "w1");
  if (options.optimism == PracticalOptimism::Literal) {
    if (rule.kind != RuleKind::ElementwiseLR) {
      throw std::invalid_argument("literal optimistic update is defined for ElementwiseLR only");
    }
    if (options.step_scale != 1.0) {
      throw std::invalid_argument("literal optimistic update needs step_scale = 1");
    }
  }
  const double s = options.step_scale;
  const Vector comparator = options.meta_comparator.value_or(Vector::Zero(rule.meta_dim));
  Trajectory traj;
  detail::init_trajectory(traj, "practical", objective, rule, WeightKind::ConstantOne, x0, w1,
                          w1, comparator);
  traj.steps.reserve(static_cast<std::size_t>(horizon));

  RegretLedger ledger(comparator);
  Vector x_prev = x0;
  Vector grad_prev = objective.gradient(x0);
  Vector w = w1;
  Vector hint = Vector::Zero(rule.meta_dim);
  double regret_x = 0.0;

  for (int t = 1; t <= horizon; ++t) {
    StepRecord r;
    r.t = t;
    r.alpha = 1.0;
    r.alpha_prefix = t;
    r.w = w;
    r.jac_point = x_prev;
    r.hint = hint;
    r.x = x_prev + s * apply(rule, objective, x_prev, w);
    guard_divergence(r.x, t, "iterate", options.divergence_threshold);
    r.xbar = r.x;
    r.grad = objective.gradient(r.x);
    r.meta_grad = s * jtvp(rule, objective, x_prev, w, r.grad);
    r.f_x = objective.value(r.x);
    r.f_xbar = r.f_x;
    r.gap = suboptimality(objective, r.x);
    regret_x += detail::learner_regret_term(traj, r);
    r.regret_x = regret_x;
    r.regret_w = ledger.update(1.0, r.meta_grad, w, hint);
    r.beta = beta(t);
    traj.steps.push_back(r);

    Vector w_next;
    switch (options.optimism) {
      case PracticalOptimism::None:
        w_next = w - r.beta * r.meta_grad;
        break;
      case PracticalOptimism::Literal:
        w_next = w - r.beta * r.grad.cwiseProduct(r.grad + grad_prev) -
                 grad_prev.cwiseProduct(grad_prev);
        break;
      case PracticalOptimism::ErrorCorrected: {
        // Hint g~_{t+1} = s D phi(x_{t-1}, w_t)^T grad f(x_t).
        const Vector next_hint = s * jtvp(rule, objective, x_prev, w, r.grad);
        w_next = w - r.beta * (next_hint + r.meta_grad - hint);
        hint = next_hint;
        break;
      }
    }
    if (options.nonneg_w) w_next = w_next.cwiseMax(0.0);
    guard_divergence(w_next, t, "meta-parameters", options.divergence_threshold);
    w = std::move(w_next);
    x_prev = r.x;
    grad_prev = r.grad;
  }
  return traj;
}

// ---- bootstrapped meta-gradients -----------------------------------------

struct BmgOptions {
  std::optional<Vector> meta_comparator;
  /// Weights handed to target oracles; the BMG update itself is unweighted.
  WeightSchedule weights = WeightSchedule::constant_one();
  double divergence_threshold = kDivergenceThreshold;
};

/// Bootstrapped meta-gradient driver:
///   x_t = x_{t-1} + phi(x_{t-1}, w_t); z_t from the oracle;
///   w_{t+1} = w_t - beta_t D phi(x_{t-1}, w_t)^T (grad mu(x_t) - grad mu(z_t)).
inline Trajectory run_bmg(const Objective& objective, const UpdateRule& rule,
                          const TargetOracle& oracle, const DistanceGenerator& dgf,
                          const BetaSchedule& beta, int horizon, const Vector& x0,
                          const Vector& w1, const BmgOptions& options = {}) {
  if (horizon < 1) throw std::invalid_argument("bmg: T must be >= 1");
  if (objective.dim() != rule.param_dim) throw DimensionError("bmg: objective/rule dims");
  if (dgf.dim() != rule.param_dim) throw DimensionError("bmg: distance generator dims");
  require_dim(x0, rule.param_dim, "x0");
  require_dim(w1, rule.meta_dim, "w1");
  const Vector comparator = options.meta_comparator.value_or(Vector::Zero(rule.meta_dim));
  Trajectory traj;
  detail::init_trajectory(traj, "bmg", objective, rule, options.weights.kind(), x0, w1, w1,
                          comparator);
  traj.steps.reserve(static_cast<std::size_t>(horizon));

  RegretLedger ledger(comparator);
  Vector x_prev = x0;
  Vector w = w1;
  double regret_x = 0.0;

  for (int t = 1; t <= horizon; ++t) {
    StepRecord r;
    r.t = t;
    r.alpha = options.weights.alpha(t);
    r.alpha_prefix = options.weights.prefix(t);
    r.w = w;
    r.jac_point = x_prev;
    r.hint = Vector::Zero(rule.meta_dim);
    r.x = x_prev + apply(rule, objective, x_prev, w);
    guard_divergence(r.x, t, "iterate", options.divergence_threshold);
    r.xbar = r.x;
    r.grad = objective.gradient(r.x);
    r.f_x = objective.value(r.x);
    r.f_xbar = r.f_x;
    r.gap = suboptimality(objective, r.x);
    regret_x += detail::learner_regret_term(traj, r);
    r.regret_x = regret_x;
    r.beta = beta(t);
    traj.steps.push_back(r);

    const HintContext ctx{objective, rule, options.weights,
                          std::span<const StepRecord>(traj.steps)};
    BmgTarget target = oracle.target(ctx);
    require_dim(target.z, rule.param_dim, "target");
    require_finite(target.z, "target");
    StepRecord& cur = traj.steps.back();
    const Vector mismatch = dgf.gradient(cur.x) - dgf.gradient(target.z);
    cur.meta_grad = jtvp(rule, objective, x_prev, w, mismatch);
    cur.target_dist = bregman(dgf, target.z, cur.x);
    cur.target = std::move(target.z);
    cur.regret_w = ledger.update(cur.alpha, cur.meta_grad, w);

    w = w - cur.beta * cur.meta_grad;
    guard_divergence(w, t, "meta-parameters", options.divergence_threshold);
    x_prev = cur.x;
  }
  return traj;
}

}  // namespace metaopt

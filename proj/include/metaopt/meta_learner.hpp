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

#include "metaopt/constraints.hpp"
#include "metaopt/core.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace metaopt {

enum class BetaKind { Constant, Accelerated, Custom };

/// Meta step-size schedule t -> beta_t (t >= 1).
class BetaSchedule {
 public:
  static BetaSchedule constant(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw std::invalid_argument("constant beta must be positive and finite");
    }
    BetaSchedule s;
    s.kind_ = BetaKind::Constant;
    s.value_ = beta;
    return s;
  }

  /// beta_t = (t - 1) / (2 t q L); beta_1 = 0.
  static BetaSchedule accelerated(double lambda_tilde, double smoothness) {
    if (!(lambda_tilde > 0.0) || !(smoothness > 0.0)) {
      throw std::invalid_argument("accelerated schedule needs positive lambda_tilde and L");
    }
    BetaSchedule s;
    s.kind_ = BetaKind::Accelerated;
    s.lambda_tilde_ = lambda_tilde;
    s.smoothness_ = smoothness;
    return s;
  }

  static BetaSchedule custom(std::function<double(int)> fn, std::string label) {
    if (!fn) throw std::invalid_argument("custom beta schedule needs a callable");
    BetaSchedule s;
    s.kind_ = BetaKind::Custom;
    s.fn_ = std::move(fn);
    s.label_ = std::move(label);
    return s;
  }

  double operator()(int t) const {
    if (t < 1) throw std::out_of_range("beta schedule is indexed from t = 1");
    switch (kind_) {
      case BetaKind::Constant:
        return value_;
      case BetaKind::Accelerated: {
        const double td = t;
        return (td - 1.0) / (2.0 * td * lambda_tilde_ * smoothness_);
      }
      case BetaKind::Custom:
        return fn_(t);
    }
    return value_;
  }

  BetaKind kind() const noexcept { return kind_; }
  double constant_value() const noexcept { return value_; }
  double lambda_tilde() const noexcept { return lambda_tilde_; }
  double smoothness() const noexcept { return smoothness_; }

  std::string describe() const {
    switch (kind_) {
      case BetaKind::Constant: return "constant(" + std::to_string(value_) + ")";
      case BetaKind::Accelerated:
        return "accelerated(q=" + std::to_string(lambda_tilde_) +
               ", L=" + std::to_string(smoothness_) + ")";
      case BetaKind::Custom: return "custom(" + label_ + ")";
    }
    return "?";
  }

 private:
  BetaSchedule() = default;

  BetaKind kind_ = BetaKind::Constant;
  double value_ = 0.0;
  double lambda_tilde_ = 0.0;
  double smoothness_ = 0.0;
  std::function<double(int)> fn_;
  std::string label_;
};

/// Follow-the-regularised-leader state over the linear losses <g_s, w>.
///
/// The regulariser is ||w - anchor||^2 / (2 beta_t). With anchor = 0 this is
/// the textbook form; drivers anchor at w_1 so that the first prediction is w_1.
struct MetaLearnerState {
  Vector accumulated;                 ///< G_t = sum_s alpha_s g_s
  std::optional<Vector> pending_hint; ///< alpha_{t+1} g~_{t+1}, only during a step
  BetaSchedule beta = BetaSchedule::constant(1.0);
  ConstraintSet constraint = ConstraintSet::unconstrained(0);
  Vector anchor;
  int step_index = 0;
  double divergence_threshold = kDivergenceThreshold;

  static MetaLearnerState create(BetaSchedule beta, ConstraintSet constraint,
                                 std::optional<Vector> anchor = std::nullopt) {
    MetaLearnerState s;
    const Index m = constraint.dim();
    s.accumulated = Vector::Zero(m);
    s.beta = std::move(beta);
    s.constraint = std::move(constraint);
    s.anchor = anchor ? std::move(*anchor) : Vector::Zero(m);
    require_dim(s.anchor, m, "anchor");
    return s;
  }

  Index dim() const noexcept { return accumulated.size(); }

  /// The first prediction: the regulariser's minimiser over the feasible set.
  Vector initial_prediction() const { return constraint.project(anchor); }
};

namespace detail {

inline Vector ftrl_argmin(MetaLearnerState& state, const Vector& g_t, double alpha_t,
                          const Vector* hint_next, double alpha_next) {
  const Index m = state.dim();
  require_dim(g_t, m, "meta-gradient");
  require_finite(g_t, "meta-gradient");
  if (!(alpha_t > 0.0)) throw std::invalid_argument("alpha_t must be positive");
  const int t = state.step_index + 1;

  state.accumulated += alpha_t * g_t;
  guard_divergence(state.accumulated, t, "accumulated meta-gradient",
                   std::numeric_limits<double>::max());

  Vector linear = state.accumulated;
  if (hint_next != nullptr) {
    require_dim(*hint_next, m, "hint");
    require_finite(*hint_next, "hint");
    if (!(alpha_next > 0.0)) throw std::invalid_argument("alpha_next must be positive");
    if (!hint_next->isZero(0.0)) {
      state.pending_hint = alpha_next * *hint_next;
      linear += *state.pending_hint;
    }
  }

  const double beta_t = state.beta(t);
  if (!(beta_t >= 0.0) || !std::isfinite(beta_t)) {
    throw std::invalid_argument("beta_t must be finite and non-negative");
  }
  // beta_t = 0: infinite regularisation, the argmin is the anchor's projection.
  Vector w = beta_t == 0.0 ? state.initial_prediction()
                           : state.constraint.project(state.anchor - beta_t * linear);
  state.pending_hint.reset();
  state.step_index = t;
  guard_divergence(w, t, "meta-parameters", state.divergence_threshold);
  return w;
}

}  // namespace detail

/// w_{t+1} = P(anchor - beta_t G_t).
inline Vector ftrl_step(MetaLearnerState& state, const Vector& g_t, double alpha_t) {
  return detail::ftrl_argmin(state, g_t, alpha_t, nullptr, 0.0);
}

/// w_{t+1} = P(anchor - beta_t (alpha_{t+1} hint_next + G_t)).
inline Vector aoftrl_step(MetaLearnerState& state, const Vector& g_t, const Vector& hint_next,
                          double alpha_t, double alpha_next) {
  return detail::ftrl_argmin(state, g_t, alpha_t, &hint_next, alpha_next);
}

/// Running meta regret sum_t alpha_t <g_t, w_t - w*> against a fixed comparator,
/// plus the hint-correlation diagnostic min_t <g_t, g~_t> / ||g_t||^2.
struct RegretLedger {
  Vector comparator;
  double total = 0.0;
  double min_correlation = kInf;

  explicit RegretLedger(Vector w_star) : comparator(std::move(w_star)) {}

  double update(double alpha, const Vector& g, const Vector& w) {
    require_dim(g, comparator.size(), "ledger g");
    require_dim(w, comparator.size(), "ledger w");
    total += alpha * g.dot(w - comparator);
    return total;
  }

  double update(double alpha, const Vector& g, const Vector& w, const Vector& hint) {
    const double norm2 = g.squaredNorm();
    if (norm2 > 0.0) min_correlation = std::min(min_correlation, g.dot(hint) / norm2);
    return update(alpha, g, w);
  }

  /// <g_t, g~_t> >= eps ||g_t||^2 at every recorded step.
  bool correlation_satisfied(double eps) const { return min_correlation >= eps; }
};

inline double regret_ledger_update(RegretLedger& ledger, double alpha, const Vector& g,
                                   const Vector& w) {
  return ledger.update(alpha, g, w);
}

}  // namespace metaopt

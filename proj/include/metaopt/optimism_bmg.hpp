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

// Hint policies for optimistic FTRL, Bregman distance generators, bootstrapped
// targets, and the two maps that translate between hint sequences and target
// sequences.

#include "metaopt/core.hpp"
#include "metaopt/meta_learner.hpp"
#include "metaopt/problems.hpp"
#include "metaopt/trajectory.hpp"
#include "metaopt/update_rules.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace metaopt {

// ---- distance generators ---------------------------------------------------

enum class DgfKind { HalfSquaredEuclidean, QuadraticForm };

/// Strictly convex mu with closed-form gradient inverse.
///   HalfSquaredEuclidean  mu(x) = ||x||^2 / 2
///   QuadraticForm         mu(x) = <x, Q x>, grad mu(x) = 2 Q x
class DistanceGenerator {
 public:
  static DistanceGenerator half_squared_euclidean(Index n) {
    DistanceGenerator d;
    d.kind_ = DgfKind::HalfSquaredEuclidean;
    d.dim_ = n;
    return d;
  }

  /// mu(x) = <x, Q x> for symmetric positive definite Q.
  static DistanceGenerator quadratic_form(const Matrix& q) {
    if (q.rows() != q.cols()) throw DimensionError("quadratic form needs a square matrix");
    DistanceGenerator d;
    d.kind_ = DgfKind::QuadraticForm;
    d.dim_ = q.rows();
    d.q_ = q;
    d.factor_ = std::make_shared<Eigen::LDLT<Matrix>>(2.0 * q);
    if (d.factor_->info() != Eigen::Success || !d.factor_->isPositive() ||
        (d.factor_->vectorD().array() <= 0.0).any()) {
      throw std::invalid_argument("quadratic form is not positive definite");
    }
    return d;
  }

  /// mu = f for a quadratic objective.
  static DistanceGenerator matching(const QuadraticProblem& problem) {
    return quadratic_form(problem.q_matrix());
  }

  DgfKind kind() const noexcept { return kind_; }
  Index dim() const noexcept { return dim_; }

  double value(const Vector& x) const {
    require_dim(x, dim_, "dgf point");
    return kind_ == DgfKind::HalfSquaredEuclidean ? 0.5 * x.squaredNorm() : x.dot(q_ * x);
  }

  Vector gradient(const Vector& x) const {
    require_dim(x, dim_, "dgf point");
    return kind_ == DgfKind::HalfSquaredEuclidean ? x : Vector(2.0 * (q_ * x));
  }

  /// x with grad mu(x) = y.
  Vector gradient_inverse(const Vector& y) const {
    require_dim(y, dim_, "dgf dual point");
    require_finite(y, "dgf dual point");
    if (kind_ == DgfKind::HalfSquaredEuclidean) return y;
    Vector x = factor_->solve(y);
    if (!x.allFinite()) throw std::runtime_error("gradient inverse failed: singular factor");
    return x;
  }

  std::string describe() const {
    return kind_ == DgfKind::HalfSquaredEuclidean ? "half_squared_euclidean" : "quadratic_form";
  }

 private:
  DistanceGenerator() = default;

  DgfKind kind_ = DgfKind::HalfSquaredEuclidean;
  Index dim_ = 0;
  Matrix q_;
  std::shared_ptr<const Eigen::LDLT<Matrix>> factor_;
};

/// B_z(x) = mu(x) - mu(z) - <grad mu(z), x - z>.
inline double bregman(const DistanceGenerator& dgf, const Vector& z, const Vector& x) {
  require_finite(z, "bregman z");
  require_finite(x, "bregman x");
  if (dgf.kind() == DgfKind::HalfSquaredEuclidean) return 0.5 * (x - z).squaredNorm();
  return std::max(0.0, dgf.value(x) - dgf.value(z) - dgf.gradient(z).dot(x - z));
}

inline Vector grad_inverse(const DistanceGenerator& dgf, const Vector& y) {
  return dgf.gradient_inverse(y);
}

// ---- targets ---------------------------------------------------------------

/// Whether the target is reached by subtracting or adding the tangent.
enum class TargetSign { Minus, Plus };

/// Target z with its tangent y: z = x - y (Minus) or z = x + y (Plus).
struct BmgTarget {
  Vector z;
  Vector y;
  TargetSign sign = TargetSign::Minus;

  static BmgTarget from_tangent(const Vector& x, Vector tangent, TargetSign sign) {
    BmgTarget out;
    out.z = sign == TargetSign::Minus ? Vector(x - tangent) : Vector(x + tangent);
    out.y = std::move(tangent);
    out.sign = sign;
    return out;
  }

  static BmgTarget from_point(const Vector& x, Vector z, TargetSign sign = TargetSign::Minus) {
    BmgTarget out;
    out.y = sign == TargetSign::Minus ? Vector(x - z) : Vector(z - x);
    out.z = std::move(z);
    out.sign = sign;
    return out;
  }
};

// ---- history views ---------------------------------------------------------

/// What a hint policy or target oracle may read at the end of iteration t:
/// records 1..t, the last of which is the current step.
struct HintContext {
  const Objective& objective;
  const UpdateRule& rule;
  const WeightSchedule& weights;
  std::span<const StepRecord> history;

  int t() const noexcept { return static_cast<int>(history.size()); }
  const StepRecord& current() const { return history.back(); }
};

/// y~_{t+1} from the history (a prediction of the next gradient in x-space).
using TangentSource = std::function<Vector(const HintContext&)>;

/// y~_{t+1} = grad f(xbar_t).
inline TangentSource tangent_prev_gradient() {
  return [](const HintContext& ctx) { return ctx.current().grad; };
}

// ---- hint policies -----------------------------------------------------------

enum class HintKind { Zero, PrevGradient, PrevMetaGrad, FromTargets, InducedFromTangents };

inline std::string_view to_string(HintKind kind) {
  switch (kind) {
    case HintKind::Zero: return "zero";
    case HintKind::PrevGradient: return "prev_gradient";
    case HintKind::PrevMetaGrad: return "prev_meta_grad";
    case HintKind::FromTargets: return "from_targets";
    case HintKind::InducedFromTangents: return "induced_from_tangents";
  }
  return "?";
}

/// Produces g~_{t+1} from iterations <= t.
class HintPolicy {
 public:
  virtual ~HintPolicy() = default;
  virtual HintKind kind() const = 0;
  virtual Vector next_hint(const HintContext& ctx) const = 0;
};

class ZeroHint final : public HintPolicy {
 public:
  HintKind kind() const override { return HintKind::Zero; }
  Vector next_hint(const HintContext& ctx) const override {
    return Vector::Zero(ctx.rule.meta_dim);
  }
};

/// g~_{t+1} = grad f(xbar_t); needs meta_dim == param_dim.
class PrevGradientHint final : public HintPolicy {
 public:
  HintKind kind() const override { return HintKind::PrevGradient; }
  Vector next_hint(const HintContext& ctx) const override {
    if (ctx.rule.meta_dim != ctx.rule.param_dim) {
      throw DimensionError("prev-gradient hints need meta_dim == param_dim");
    }
    if (ctx.history.empty()) return Vector::Zero(ctx.rule.meta_dim);
    return ctx.current().grad;
  }
};

/// g~_{t+1} = D phi(jac_t, w_t)^T grad f(xbar_t), i.e. the last meta-gradient.
inline Vector hint_prev_metagrad(const HintContext& ctx) {
  if (ctx.history.empty()) return Vector::Zero(ctx.rule.meta_dim);
  const StepRecord& r = ctx.current();
  return jtvp(ctx.rule, ctx.objective, r.jac_point, r.w, r.grad);
}

class PrevMetaGradHint final : public HintPolicy {
 public:
  HintKind kind() const override { return HintKind::PrevMetaGrad; }
  Vector next_hint(const HintContext& ctx) const override { return hint_prev_metagrad(ctx); }
};

/// Supplies z_t at the end of iteration t.
class TargetOracle {
 public:
  virtual ~TargetOracle() = default;
  virtual BmgTarget target(const HintContext& ctx) const = 0;
};

/// z_t = x_t: zero mismatch.
class IdentityTargetOracle final : public TargetOracle {
 public:
  BmgTarget target(const HintContext& ctx) const override {
    const Vector& x = ctx.current().xbar;
    return BmgTarget::from_point(x, x);
  }
};

/// Bootstrapped tangent y_t = phi(x_t, w_t) - grad f(x_t + phi(x_t, w_t)).
class TangentTargetOracle final : public TargetOracle {
 public:
  explicit TangentTargetOracle(TargetSign sign = TargetSign::Minus) : sign_(sign) {}

  BmgTarget target(const HintContext& ctx) const override {
    const StepRecord& r = ctx.current();
    const Vector step = apply(ctx.rule, ctx.objective, r.xbar, r.w);
    Vector y = step - ctx.objective.gradient(r.xbar + step);
    return BmgTarget::from_tangent(r.xbar, std::move(y), sign_);
  }

 private:
  TargetSign sign_;
};

/// z_t = grad mu^{-1}(grad mu(x_t) - (alpha_{t+1} y~_{t+1} + alpha_t grad f(x_t))).
class HintDrivenTargetOracle final : public TargetOracle {
 public:
  HintDrivenTargetOracle(TangentSource source, DistanceGenerator dgf)
      : source_(std::move(source)), dgf_(std::move(dgf)) {}

  BmgTarget target(const HintContext& ctx) const override {
    const StepRecord& r = ctx.current();
    const int t = ctx.t();
    const Vector ytilde = source_(ctx);
    const Vector dual = dgf_.gradient(r.xbar) -
                        (ctx.weights.alpha(t + 1) * ytilde + ctx.weights.alpha(t) * r.grad);
    return BmgTarget::from_point(r.xbar, dgf_.gradient_inverse(dual));
  }

 private:
  TangentSource source_;
  DistanceGenerator dgf_;
};

namespace detail {

/// alpha_{t+1} g~_{t+1} from a target: D phi^T (grad mu(xbar_t) - grad mu(z_t)
/// - alpha_t grad f(xbar_t)) + alpha_t g~_t.
inline Vector scaled_hint_from_target(const UpdateRule& rule, const Objective& objective,
                                      const DistanceGenerator& dgf, const StepRecord& r,
                                      const Vector& z, const Vector& hint_t, double alpha_t) {
  const Vector v = dgf.gradient(r.xbar) - dgf.gradient(z) - alpha_t * r.grad;
  return jtvp(rule, objective, r.jac_point, r.w, v) + alpha_t * hint_t;
}

}  // namespace detail

/// Hints that make optimistic FTRL reproduce bootstrapped targets.
class TargetDerivedHint final : public HintPolicy {
 public:
  TargetDerivedHint(std::shared_ptr<const TargetOracle> oracle, DistanceGenerator dgf)
      : oracle_(std::move(oracle)), dgf_(std::move(dgf)) {
    if (!oracle_) throw std::invalid_argument("TargetDerivedHint needs an oracle");
  }

  HintKind kind() const override { return HintKind::FromTargets; }

  Vector next_hint(const HintContext& ctx) const override {
    if (ctx.history.empty()) return Vector::Zero(ctx.rule.meta_dim);
    const int t = ctx.t();
    const StepRecord& r = ctx.current();
    const BmgTarget target = oracle_->target(ctx);
    return detail::scaled_hint_from_target(ctx.rule, ctx.objective, dgf_, r, target.z, r.hint,
                                           ctx.weights.alpha(t)) /
           ctx.weights.alpha(t + 1);
  }

 private:
  std::shared_ptr<const TargetOracle> oracle_;
  DistanceGenerator dgf_;
};

/// Hints induced by x-space predictions:
/// alpha_{t+1} g~_{t+1} = alpha_{t+1} D phi(jac_t, w_t)^T y~_{t+1} + alpha_t g~_t.
class InducedTangentHint final : public HintPolicy {
 public:
  explicit InducedTangentHint(TangentSource source) : source_(std::move(source)) {}

  HintKind kind() const override { return HintKind::InducedFromTangents; }

  Vector next_hint(const HintContext& ctx) const override {
    if (ctx.history.empty()) return Vector::Zero(ctx.rule.meta_dim);
    const int t = ctx.t();
    const StepRecord& r = ctx.current();
    const double a_next = ctx.weights.alpha(t + 1);
    return (a_next * jtvp(ctx.rule, ctx.objective, r.jac_point, r.w, source_(ctx)) +
            ctx.weights.alpha(t) * r.hint) /
           a_next;
  }

 private:
  TangentSource source_;
};

// ---- batch translations between hints and targets --------------------------

/// Targets induced by a tangent sequence along a recorded prefix.
/// `next_tangents[i]` is y~_{t+1} for step t = i + 1.
inline std::vector<BmgTarget> targets_from_hints(std::span<const Vector> next_tangents,
                                                 std::span<const StepRecord> prefix,
                                                 const DistanceGenerator& dgf,
                                                 const WeightSchedule& weights) {
  if (next_tangents.size() != prefix.size()) {
    throw DimensionError("targets_from_hints: one tangent per recorded step");
  }
  std::vector<BmgTarget> out;
  out.reserve(prefix.size());
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    const StepRecord& r = prefix[i];
    const int t = static_cast<int>(i) + 1;
    const Vector dual =
        dgf.gradient(r.xbar) - (weights.alpha(t + 1) * next_tangents[i] + weights.alpha(t) * r.grad);
    out.push_back(BmgTarget::from_point(r.xbar, dgf.gradient_inverse(dual)));
  }
  return out;
}

/// g~_1..g~_{T+1} induced by tangents (g~_1 = 0).
inline std::vector<Vector> induced_hints(std::span<const Vector> next_tangents,
                                         std::span<const StepRecord> prefix,
                                         const Objective& objective, const UpdateRule& rule,
                                         const WeightSchedule& weights) {
  if (next_tangents.size() != prefix.size()) {
    throw DimensionError("induced_hints: one tangent per recorded step");
  }
  std::vector<Vector> hints{Vector::Zero(rule.meta_dim)};
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    const StepRecord& r = prefix[i];
    const int t = static_cast<int>(i) + 1;
    const double a_next = weights.alpha(t + 1);
    hints.push_back((a_next * jtvp(rule, objective, r.jac_point, r.w, next_tangents[i]) +
                     weights.alpha(t) * hints.back()) /
                    a_next);
  }
  return hints;
}

/// g~_1..g~_{T+1} that make optimistic FTRL follow the given targets (g~_1 = 0).
inline std::vector<Vector> hints_from_targets(std::span<const BmgTarget> targets,
                                              std::span<const StepRecord> prefix,
                                              const Objective& objective, const UpdateRule& rule,
                                              const DistanceGenerator& dgf,
                                              const WeightSchedule& weights) {
  if (targets.size() != prefix.size()) {
    throw DimensionError("hints_from_targets: one target per recorded step");
  }
  std::vector<Vector> hints{Vector::Zero(rule.meta_dim)};
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    const int t = static_cast<int>(i) + 1;
    const Vector scaled = detail::scaled_hint_from_target(rule, objective, dgf, prefix[i],
                                                          targets[i].z, hints.back(),
                                                          weights.alpha(t));
    hints.push_back(scaled / weights.alpha(t + 1));
  }
  return hints;
}

// ---- error-corrected bootstrapped update -----------------------------------

struct ErrorCorrectedStep {
  Vector corrected;    ///< w_{t+1} with the correction term
  Vector uncorrected;  ///< the plain bootstrapped update
  Vector correction;   ///< beta_t alpha_t D phi(jac_{t-1}, w_{t-1})^T y~_t
};

/// Recursive form of optimistic FTRL with hints g~_{t+1} = D phi(jac_t, w_t)^T y~_{t+1}:
///
///   w_{t+1} = c + (beta_t / beta_{t-1}) (w_t - c)
///             - beta_t D phi(jac_t, w_t)^T (alpha_{t+1} y~_{t+1} + alpha_t grad f(xbar_t))
///             + beta_t alpha_t D phi(jac_{t-1}, w_{t-1})^T y~_t
///
/// with c the regulariser anchor. When t = 1 or beta_{t-1} = 0 the argmin form
/// is used instead. Advances `state` exactly like aoftrl_step. Requires an
/// unconstrained meta-learner.
inline ErrorCorrectedStep bmg_error_corrected_step(MetaLearnerState& state,
                                                   std::span<const StepRecord> prefix,
                                                   const Vector& next_tangent,
                                                   const Vector& prev_tangent,
                                                   const Objective& objective,
                                                   const UpdateRule& rule,
                                                   const WeightSchedule& weights) {
  if (state.constraint.kind() != ConstraintKind::Unconstrained) {
    throw std::invalid_argument("error-corrected step needs an unconstrained meta-learner");
  }
  const int t = state.step_index + 1;
  if (static_cast<int>(prefix.size()) != t) {
    throw DimensionError("error-corrected step: prefix must end at the current step");
  }
  const StepRecord& r = prefix.back();
  const double a_t = weights.alpha(t);
  const double a_next = weights.alpha(t + 1);
  const double beta_t = state.beta(t);
  const double beta_prev = t >= 2 ? state.beta(t - 1) : 0.0;

  const Vector g_t = jtvp(rule, objective, r.jac_point, r.w, r.grad);
  const Vector bootstrap =
      jtvp(rule, objective, r.jac_point, r.w, a_next * next_tangent + a_t * r.grad);

  ErrorCorrectedStep out;
  out.correction = Vector::Zero(rule.meta_dim);
  if (t >= 2) {
    const StepRecord& prev = prefix[prefix.size() - 2];
    out.correction = beta_t * a_t * jtvp(rule, objective, prev.jac_point, prev.w, prev_tangent);
  }

  if (t >= 2 && beta_prev > 0.0) {
    out.corrected = state.anchor + (beta_t / beta_prev) * (r.w - state.anchor) -
                    beta_t * bootstrap + out.correction;
    state.accumulated += a_t * g_t;
    state.step_index = t;
    guard_divergence(out.corrected, t, "meta-parameters", state.divergence_threshold);
  } else {
    const Vector hint = jtvp(rule, objective, r.jac_point, r.w, next_tangent);
    out.corrected = aoftrl_step(state, g_t, hint, a_t, a_next);
  }
  out.uncorrected = out.corrected - out.correction;
  return out;
}

}  // namespace metaopt

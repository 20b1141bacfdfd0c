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
#include "metaopt/problems.hpp"
#include "metaopt/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>

namespace metaopt {

enum class RuleKind { Direct, ElementwiseLR, AdaGradStyle, PlainGradient };

inline std::string_view to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::Direct: return "direct";
    case RuleKind::ElementwiseLR: return "elementwise_lr";
    case RuleKind::AdaGradStyle: return "adagrad_style";
    case RuleKind::PlainGradient: return "plain_gradient";
  }
  return "?";
}

inline RuleKind rule_kind_from_string(std::string_view name) {
  for (auto k : {RuleKind::Direct, RuleKind::ElementwiseLR, RuleKind::AdaGradStyle,
                 RuleKind::PlainGradient}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown rule kind '" + std::string(name) + "'");
}

/// Parameterised update rule phi(x, w) together with its Jacobian in w.
///
///   Direct         phi = w
///   ElementwiseLR  phi = w .* grad f(x)
///   AdaGradStyle   phi = grad f(x) ./ sqrt(max(w, floor))
///   PlainGradient  phi = -step * grad f(x)      (w is inert)
struct UpdateRule {
  RuleKind kind = RuleKind::Direct;
  Index param_dim = 0;
  Index meta_dim = 0;
  double fixed_step = 0.0;
  double epsilon_floor = 1e-8;

  static UpdateRule direct(Index n) { return {RuleKind::Direct, n, n, 0.0, 1e-8}; }
  static UpdateRule elementwise_lr(Index n) { return {RuleKind::ElementwiseLR, n, n, 0.0, 1e-8}; }
  static UpdateRule adagrad_style(Index n, double floor = 1e-8) {
    if (!(floor > 0.0)) throw std::invalid_argument("epsilon floor must be positive");
    return {RuleKind::AdaGradStyle, n, n, 0.0, floor};
  }
  static UpdateRule plain_gradient(Index n, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("plain gradient step must be positive");
    return {RuleKind::PlainGradient, n, n, step, 1e-8};
  }
  static UpdateRule of_kind(RuleKind kind, Index n, double step = 0.1) {
    switch (kind) {
      case RuleKind::Direct: return direct(n);
      case RuleKind::ElementwiseLR: return elementwise_lr(n);
      case RuleKind::AdaGradStyle: return adagrad_style(n);
      case RuleKind::PlainGradient: return plain_gradient(n, step);
    }
    return direct(n);
  }

  bool affine_in_w() const noexcept { return kind != RuleKind::AdaGradStyle; }
};

namespace detail {

inline void check_rule_inputs(const UpdateRule& rule, const Objective& objective, const Vector& x,
                              const Vector& w) {
  if (objective.dim() != rule.param_dim) throw DimensionError("rule and objective dims differ");
  require_dim(x, rule.param_dim, "x");
  require_dim(w, rule.meta_dim, "w");
  require_finite(x, "x");
  require_finite(w, "w");
}

inline Vector floored(const UpdateRule& rule, const Vector& w) {
  return w.cwiseMax(rule.epsilon_floor);
}

}  // namespace detail

inline Vector apply(const UpdateRule& rule, const Objective& objective, const Vector& x,
                    const Vector& w) {
  detail::check_rule_inputs(rule, objective, x, w);
  switch (rule.kind) {
    case RuleKind::Direct:
      return w;
    case RuleKind::ElementwiseLR:
      return w.cwiseProduct(objective.gradient(x));
    case RuleKind::AdaGradStyle:
      return objective.gradient(x).cwiseQuotient(detail::floored(rule, w).cwiseSqrt());
    case RuleKind::PlainGradient:
      return -rule.fixed_step * objective.gradient(x);
  }
  return w;
}

/// D_w phi(x, w)^T v.
inline Vector jtvp(const UpdateRule& rule, const Objective& objective, const Vector& x,
                   const Vector& w, const Vector& v) {
  detail::check_rule_inputs(rule, objective, x, w);
  require_dim(v, rule.param_dim, "v");
  require_finite(v, "v");
  switch (rule.kind) {
    case RuleKind::Direct:
      return v;
    case RuleKind::ElementwiseLR:
      return objective.gradient(x).cwiseProduct(v);
    case RuleKind::AdaGradStyle: {
      // d/dw of g / sqrt(w) is -g / (2 w^{3/2}); zero below the floor.
      const Vector wf = detail::floored(rule, w);
      Vector out = -0.5 * objective.gradient(x).cwiseProduct(v).cwiseQuotient(
                              wf.cwiseProduct(wf.cwiseSqrt()));
      for (Index i = 0; i < w.size(); ++i) {
        if (w[i] < rule.epsilon_floor) out[i] = 0.0;
      }
      return out;
    }
    case RuleKind::PlainGradient:
      return Vector::Zero(rule.meta_dim);
  }
  return v;
}

/// Empirical max of ||D phi^T grad f(x)||^2 / ||grad f(x)||^2.
///
/// Points x are drawn uniformly from the box [-extent, extent]^n and w from
/// `w_region`. The result under-estimates the true supremum.
inline double estimate_lambda(const UpdateRule& rule, const Objective& objective, int sample_count,
                              const ConstraintSet& w_region, std::uint64_t seed,
                              double extent = 10.0) {
  if (sample_count < 1) throw std::invalid_argument("estimate_lambda: sample_count >= 1");
  require_dim(Vector::Zero(w_region.dim()), rule.meta_dim, "w_region");
  Rng rng(seed);
  double best = -1.0;
  for (int s = 0; s < sample_count; ++s) {
    const Vector x = rng.uniform_vector(rule.param_dim, -extent, extent);
    const Vector w = w_region.sample(rng);
    const Vector g = objective.gradient(x);
    const double denom = g.squaredNorm();
    if (denom == 0.0) continue;
    best = std::max(best, jtvp(rule, objective, x, w, g).squaredNorm() / denom);
  }
  if (best < 0.0) throw std::runtime_error("estimate_lambda: every sampled gradient was zero");
  return best;
}

}  // namespace metaopt

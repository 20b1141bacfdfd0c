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
#include "metaopt/drivers.hpp"
#include "metaopt/meta_learner.hpp"
#include "metaopt/optimism_bmg.hpp"
#include "metaopt/problems.hpp"
#include "metaopt/trajectory.hpp"
#include "metaopt/update_rules.hpp"

#include <Eigen/QR>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace metaopt {

// ---- classical baselines ---------------------------------------------------

namespace detail {

inline Trajectory baseline_trajectory(const std::string& name, const Objective& objective,
                                      const Vector& x0) {
  Trajectory traj;
  traj.driver = name;
  traj.rule = RuleKind::PlainGradient;
  traj.xbar0 = x0;
  traj.x_star = objective.minimizer();
  traj.f_star = objective.min_value().value_or(kNaN);
  traj.smoothness = objective.smoothness().value_or(kNaN);
  return traj;
}

inline void push_baseline_step(Trajectory& traj, const Objective& objective, int t,
                               const Vector& x, double& regret_x) {
  guard_divergence(x, t, "iterate");
  StepRecord r;
  r.t = t;
  r.x = x;
  r.xbar = x;
  r.grad = objective.gradient(x);
  r.f_x = objective.value(x);
  r.f_xbar = r.f_x;
  r.gap = suboptimality(objective, x);
  r.alpha_prefix = t;
  if (traj.x_star) regret_x += r.grad.dot(x - *traj.x_star);
  r.regret_x = regret_x;
  traj.steps.push_back(std::move(r));
}

}  // namespace detail

/// x_t = x_{t-1} + momentum (x_{t-1} - x_{t-2}) - step grad f(x_{t-1}).
/// The initial velocity x_0 - x_{-1} defaults to zero.
inline Trajectory heavy_ball(const Objective& objective, double step, double momentum, int horizon,
                             const Vector& x0,
                             const std::optional<Vector>& initial_velocity = std::nullopt) {
  if (!(step > 0.0)) throw std::invalid_argument("heavy_ball: step must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("heavy_ball: momentum must lie in [0, 1)");
  }
  if (horizon < 1) throw std::invalid_argument("heavy_ball: T must be >= 1");
  require_dim(x0, objective.dim(), "x0");
  Trajectory traj = detail::baseline_trajectory("heavy_ball", objective, x0);
  Vector velocity = initial_velocity.value_or(Vector::Zero(x0.size()));
  require_dim(velocity, x0.size(), "initial velocity");
  Vector x = x0;
  double regret_x = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    velocity = momentum * velocity - step * objective.gradient(x);
    x += velocity;
    detail::push_baseline_step(traj, objective, t, x, regret_x);
  }
  return traj;
}

inline Trajectory gradient_descent(const Objective& objective, double step, int horizon,
                                   const Vector& x0) {
  Trajectory traj = heavy_ball(objective, step, 0.0, horizon, x0);
  traj.driver = "gradient_descent";
  return traj;
}

/// Accelerated gradient with momentum (k - 1) / (k + 2):
///   y_k = x_k + (k - 1)/(k + 2) (x_k - x_{k-1}); x_{k+1} = y_k - step grad f(y_k).
inline Trajectory nesterov(const Objective& objective, double step, int horizon, const Vector& x0) {
  if (!(step > 0.0)) throw std::invalid_argument("nesterov: step must be positive");
  if (horizon < 1) throw std::invalid_argument("nesterov: T must be >= 1");
  require_dim(x0, objective.dim(), "x0");
  Trajectory traj = detail::baseline_trajectory("nesterov", objective, x0);
  Vector x = x0, x_prev = x0;
  double regret_x = 0.0;
  for (int k = 1; k <= horizon; ++k) {
    const double kd = k;
    const Vector y = x + ((kd - 1.0) / (kd + 2.0)) * (x - x_prev);
    x_prev = x;
    x = y - step * objective.gradient(y);
    detail::push_baseline_step(traj, objective, k, x, regret_x);
  }
  return traj;
}

/// Diagonal AdaGrad: a_t = a_{t-1} + g^2; x_t = x_{t-1} - step g / sqrt(max(a_t, floor)).
inline Trajectory adagrad(const Objective& objective, double step, int horizon, const Vector& x0,
                          double initial_accumulator = 0.0, double floor = 1e-8) {
  if (!(step > 0.0)) throw std::invalid_argument("adagrad: step must be positive");
  if (horizon < 1) throw std::invalid_argument("adagrad: T must be >= 1");
  if (initial_accumulator < 0.0) throw std::invalid_argument("adagrad: accumulator >= 0");
  require_dim(x0, objective.dim(), "x0");
  Trajectory traj = detail::baseline_trajectory("adagrad", objective, x0);
  Vector acc = Vector::Constant(x0.size(), initial_accumulator);
  Vector x = x0;
  double regret_x = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    const Vector g = objective.gradient(x);
    acc += g.cwiseAbs2();
    x -= step * g.cwiseQuotient(acc.cwiseMax(floor).cwiseSqrt());
    detail::push_baseline_step(traj, objective, t, x, regret_x);
  }
  return traj;
}

// ---- rate fitting ----------------------------------------------------------

struct RateFit {
  double exponent = kNaN;  ///< p in gap ~ C T^{-p}
  double intercept = kNaN;
  double residual_rms = kNaN;
  std::size_t points_used = 0;
  bool truncated = false;  ///< non-positive gaps were dropped from the tail
  std::string warning;
};

/// Negated least-squares slope of log(gap) against log(T).
///
/// The grid is truncated at the first non-positive gap (a run that converged
/// to machine precision); at least two points must remain.
inline RateFit fit_rate(std::span<const double> horizons, std::span<const double> gaps) {
  if (horizons.size() != gaps.size()) throw DimensionError("fit_rate: horizons/gaps sizes differ");
  RateFit fit;
  std::size_t n = 0;
  while (n < gaps.size() && gaps[n] > 0.0 && std::isfinite(gaps[n])) ++n;
  if (n < gaps.size()) {
    fit.truncated = true;
    fit.warning = "grid truncated at index " + std::to_string(n) + " (non-positive gap)";
  }
  if (n < 2) throw std::invalid_argument("fit_rate: fewer than two positive gaps");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(horizons[i] > 0.0)) throw std::invalid_argument("fit_rate: horizons must be positive");
    mx += std::log(horizons[i]);
    my += std::log(gaps[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(horizons[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(gaps[i]) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_rate: horizons must not all coincide");
  const double slope = sxy / sxx;
  fit.exponent = -slope;
  fit.intercept = my - slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::log(gaps[i]) - (fit.intercept + slope * std::log(horizons[i]));
    ss += e * e;
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
  fit.points_used = n;
  return fit;
}

/// Fraction of the curve discarded as transient by fit_rate_curve.
inline constexpr double kTransientFraction = 0.1;

/// Rate fitted over every recorded step after the first 10%.
inline RateFit fit_rate_curve(const Trajectory& traj) {
  const int T = traj.horizon();
  const int skip = static_cast<int>(std::floor(kTransientFraction * T));
  std::vector<double> ts, gaps;
  for (int t = skip + 1; t <= T; ++t) {
    ts.push_back(t);
    gaps.push_back(traj.at(t).gap);
  }
  return fit_rate(ts, gaps);
}

/// Gaps of a single run read off at several horizons. Valid when the
/// schedules do not depend on T, so that a shorter run is a prefix.
inline std::vector<double> gaps_at(const Trajectory& traj, std::span<const int> horizons) {
  std::vector<double> out;
  for (int T : horizons) out.push_back(traj.at(T).gap);
  return out;
}

// ---- reduction certificates -----------------------------------------------

/// Step-size of the momentum form of averaged FTRL with the identity rule,
/// alpha_t = t and constant beta: beta~_t = 2 beta (t - 1) / (t + 1).
inline double heavy_ball_step_closed_form(int t, double beta) {
  const double td = t;
  return 2.0 * beta * (td - 1.0) / (td + 1.0);
}

/// rho~_t = (t - 2) / (t + 1).
inline double heavy_ball_momentum_closed_form(int t) {
  const double td = t;
  return (td - 2.0) / (td + 1.0);
}

struct ReductionCertificate {
  std::string name;
  /// Entries are indexed by t - 2 (the recursion starts at t = 2).
  std::vector<double> residuals;
  std::vector<double> fitted_momentum;
  std::vector<double> fitted_step;
  std::vector<double> schedule_momentum;  ///< rho_t (1 - rho_{t-1}) / rho_{t-1}
  double max_residual = 0.0;
  double max_momentum_error = 0.0;       ///< schedule identity vs (t-2)/(t+1)
  double max_fitted_momentum_error = 0.0;
  double max_fitted_step_error = 0.0;
  double max_recursion_error = 0.0;  ///< meta-parameter recursion check
  std::optional<RateFit> rate;
  bool pass = false;
  std::optional<int> first_failure;
  std::string failure;
};

inline constexpr double kReductionResidualTol = 1e-9;
inline constexpr double kReductionMomentumTol = 1e-10;

/// Runs averaged FTRL with the identity rule (alpha_t = t, constant beta,
/// unconstrained, anchor = w_1 = xbar_0) and checks that the averaged iterates
/// follow xbar_t = xbar_{t-1} + rho~_t (xbar_{t-1} - xbar_{t-2}) - beta~_t grad f(xbar_{t-1}).
///
/// Pass conditions: residual with the closed-form coefficients <= 1e-9 per
/// step, and rho~_t from the weight schedule equal to (t-2)/(t+1) within 1e-10.
/// Least-squares fits of (rho~_t, beta~_t) per step are recorded as diagnostics.
inline ReductionCertificate certify_heavy_ball_reduction(const QuadraticProblem& problem,
                                                         double beta, int horizon,
                                                         std::optional<Vector> xbar0 = {}) {
  if (horizon < 3) throw std::invalid_argument("heavy-ball certificate needs T >= 3");
  const Index n = problem.dim();
  const Vector start = xbar0.value_or(Vector::Constant(n, 4.0));
  const UpdateRule rule = UpdateRule::direct(n);
  const WeightSchedule weights = WeightSchedule::linear();
  auto meta = MetaLearnerState::create(BetaSchedule::constant(beta),
                                       ConstraintSet::unconstrained(n), start);
  const Trajectory traj = run_convex(problem, rule, weights, std::move(meta), horizon, start, start);

  ReductionCertificate cert;
  cert.name = "heavy_ball";
  for (int t = 2; t <= horizon; ++t) {
    const Vector& xb = traj.at(t).xbar;
    const Vector& xb1 = traj.xbar_before(t);
    const Vector& xb2 = traj.xbar_before(t - 1);
    const Vector g1 = problem.gradient(xb1);
    const double rho_tilde =
        weights.rho(t) * (1.0 - weights.rho(t - 1)) / weights.rho(t - 1);
    const double expected = heavy_ball_momentum_closed_form(t);
    const double step = heavy_ball_step_closed_form(t, beta);
    const double residual = (xb - (xb1 + expected * (xb1 - xb2) - step * g1)).norm();

    Matrix design(n, 2);
    design.col(0) = xb1 - xb2;
    design.col(1) = -g1;
    const Vector coef = design.colPivHouseholderQr().solve(Vector(xb - xb1));

    cert.residuals.push_back(residual);
    cert.schedule_momentum.push_back(rho_tilde);
    cert.fitted_momentum.push_back(coef[0]);
    cert.fitted_step.push_back(coef[1]);
    cert.max_residual = std::max(cert.max_residual, residual);
    cert.max_momentum_error = std::max(cert.max_momentum_error, std::abs(rho_tilde - expected));
    cert.max_fitted_momentum_error =
        std::max(cert.max_fitted_momentum_error, std::abs(coef[0] - expected));
    cert.max_fitted_step_error = std::max(cert.max_fitted_step_error, std::abs(coef[1] - step));
    if (!cert.first_failure && (residual > kReductionResidualTol ||
                                std::abs(rho_tilde - expected) > kReductionMomentumTol)) {
      cert.first_failure = t;
      cert.failure = "step " + std::to_string(t) + ": residual " + std::to_string(residual);
    }
  }
  cert.pass = !cert.first_failure.has_value();
  return cert;
}

/// Incremental recursion of optimistic FTRL in anchor-centred coordinates:
///   w_{t+1} - c = (beta_t / beta_{t-1}) (w_t - c)
///                 - beta_t (alpha_{t+1} g~_{t+1} + alpha_t (g_t - g~_t)).
/// Returns the max deviation over steps with beta_{t-1} > 0 (unconstrained runs).
inline double optimistic_recursion_error(const Trajectory& traj, const WeightSchedule& weights) {
  double worst = 0.0;
  for (int t = 2; t < traj.horizon(); ++t) {
    const StepRecord& prev = traj.at(t - 1);
    const StepRecord& cur = traj.at(t);
    const StepRecord& next = traj.at(t + 1);
    if (!(prev.beta > 0.0)) continue;
    const Vector& c = traj.meta_anchor;
    const Vector predicted =
        c + (cur.beta / prev.beta) * (cur.w - c) -
        cur.beta * (weights.alpha(t + 1) * next.hint + cur.alpha * (cur.meta_grad - cur.hint));
    worst = std::max(worst, (predicted - next.w).norm());
  }
  return worst;
}

inline constexpr double kAccelerationExponent = 1.8;

/// Optimistic FTRL with the identity rule, previous-gradient hints,
/// alpha_t = t and beta_t = (t - 1) / (2 t L). Checks the recursion (1e-9) and
/// the fitted rate exponent over `horizons` (>= 1.8).
inline ReductionCertificate certify_nesterov_reduction(const QuadraticProblem& problem,
                                                       std::span<const int> horizons,
                                                       std::optional<Vector> xbar0 = {}) {
  if (horizons.size() < 2) throw std::invalid_argument("nesterov certificate needs >= 2 horizons");
  const Index n = problem.dim();
  const Vector start = xbar0.value_or(Vector::Constant(n, 4.0));
  const int T = *std::max_element(horizons.begin(), horizons.end());
  const UpdateRule rule = UpdateRule::direct(n);
  const WeightSchedule weights = WeightSchedule::linear();
  auto meta = MetaLearnerState::create(BetaSchedule::accelerated(1.0, problem.lipschitz()),
                                       ConstraintSet::unconstrained(n), start);
  const Trajectory traj =
      run_optimistic(problem, rule, weights, std::move(meta), PrevGradientHint{}, T, start, start);

  ReductionCertificate cert;
  cert.name = "nesterov";
  cert.max_recursion_error = optimistic_recursion_error(traj, weights);
  std::vector<double> ts(horizons.begin(), horizons.end());
  const std::vector<double> gaps = gaps_at(traj, horizons);
  cert.pass = cert.max_recursion_error <= kReductionResidualTol;
  if (!cert.pass) cert.failure = "recursion error " + std::to_string(cert.max_recursion_error);
  if (start.isZero(0.0)) {
    // Already optimal: no rate to measure, the run must stay put.
    cert.pass = cert.pass && traj.back().xbar.isZero(0.0);
    return cert;
  }
  cert.rate = fit_rate(ts, gaps);
  if (cert.rate->exponent < kAccelerationExponent) {
    cert.pass = false;
    cert.failure += (cert.failure.empty() ? "" : "; ") + std::string("exponent ") +
                    std::to_string(cert.rate->exponent);
  }
  return cert;
}

// ---- preserves-regret certificate ----------------------------------------

struct PreservesRegretCertificate {
  enum class Status { Certified, NotCertified };
  Status status = Status::NotCertified;
  Vector comparator;  ///< minimal-norm passing comparator found
  double lhs = kNaN;  ///< sum alpha_t <phi(jac_t, w), grad f(xbar_t)>
  double rhs = kNaN;  ///< sum alpha_t <x*, grad f(xbar_t)>
  bool exact = false; ///< closed-form (affine) solve rather than search
  double regret_x = kNaN;
  double regret_w = kNaN;  ///< recomputed against `comparator`
  bool regret_chain_holds = false;  ///< regret_x <= regret_w + 1e-9
  std::string note;

  bool pass() const { return status == Status::Certified; }
};

/// sum_t alpha_t <g_t, w_t - u> from the recorded meta-gradients.
inline double meta_regret(const Trajectory& traj, const Vector& comparator) {
  double total = 0.0;
  for (const auto& r : traj.steps) total += r.alpha * r.meta_grad.dot(r.w - comparator);
  return total;
}

namespace detail {

inline double comparator_lhs(const Trajectory& traj, const Objective& objective,
                             const UpdateRule& rule, const Vector& w) {
  double total = 0.0;
  for (const auto& r : traj.steps) {
    total += r.alpha * apply(rule, objective, r.jac_point, w).dot(r.grad);
  }
  return total;
}

/// argmin ||w||^2 over the set subject to <c, w> <= e, by bisection on the
/// multiplier: w(nu) = P(-nu c / 2) has <c, w(nu)> non-increasing in nu.
inline std::optional<Vector> min_norm_halfspace(const ConstraintSet& set, const Vector& c, double e) {
  const Vector origin = set.project(Vector::Zero(set.dim()));
  if (c.dot(origin) <= e) return origin;
  if (c.isZero(0.0)) return std::nullopt;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200 && c.dot(set.project(-0.5 * hi * c)) > e; ++i) hi *= 2.0;
  if (c.dot(set.project(-0.5 * hi * c)) > e) return std::nullopt;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (c.dot(set.project(-0.5 * mid * c)) > e) lo = mid; else hi = mid;
  }
  return set.project(-0.5 * hi * c);
}

}  // namespace detail

inline constexpr double kCertificateTol = 1e-9;

/// Searches the constraint set for a comparator w with
/// sum alpha_t <phi(jac_t, w), grad f(xbar_t)> <= sum alpha_t <x*, grad f(xbar_t)>.
///
/// For affine rules the left side is <c, w> + d and the minimal-norm solution is
/// found by a one-dimensional multiplier search. Otherwise projected gradient
/// descent on the left side runs for `search_budget` iterations.
inline PreservesRegretCertificate certify_preserves_regret(const Trajectory& traj,
                                                           const Objective& objective,
                                                           const UpdateRule& rule,
                                                           const ConstraintSet& constraint,
                                                           int search_budget = 2000) {
  PreservesRegretCertificate cert;
  if (!traj.x_star) {
    cert.note = "objective has no known minimizer";
    return cert;
  }
  cert.rhs = 0.0;
  for (const auto& r : traj.steps) cert.rhs += r.alpha * traj.x_star->dot(r.grad);

  const Index m = rule.meta_dim;
  std::optional<Vector> found;
  Vector last = constraint.project(Vector::Zero(m));  // reported when nothing passes
  if (rule.affine_in_w()) {
    cert.exact = true;
    Vector c = Vector::Zero(m);
    for (const auto& r : traj.steps) {
      c += r.alpha * jtvp(rule, objective, r.jac_point, Vector::Zero(m), r.grad);
    }
    const double d = detail::comparator_lhs(traj, objective, rule, Vector::Zero(m));
    found = detail::min_norm_halfspace(constraint, c, cert.rhs - d + kCertificateTol);
    if (!found && c.isZero(0.0)) cert.note = "phi does not depend on w and the inequality fails";
  } else {
    Vector w = constraint.project(Vector::Zero(m));
    double lr = 1.0;
    for (int it = 0; it < search_budget; ++it) {
      const double value = detail::comparator_lhs(traj, objective, rule, w);
      if (value <= cert.rhs + kCertificateTol) {
        found = w;
        break;
      }
      Vector grad = Vector::Zero(m);
      for (const auto& r : traj.steps) grad += r.alpha * jtvp(rule, objective, r.jac_point, w, r.grad);
      if (grad.isZero(0.0)) break;
      Vector candidate = constraint.project(w - lr * grad);
      while (detail::comparator_lhs(traj, objective, rule, candidate) > value && lr > 1e-12) {
        lr *= 0.5;
        candidate = constraint.project(w - lr * grad);
      }
      w = candidate;
    }
    last = w;
  }

  if (!found) {
    if (cert.note.empty()) cert.note = "no passing comparator found within the search budget";
    cert.comparator = last;
    cert.lhs = detail::comparator_lhs(traj, objective, rule, last);
    return cert;
  }
  cert.comparator = *found;
  cert.lhs = detail::comparator_lhs(traj, objective, rule, cert.comparator);
  if (cert.lhs > cert.rhs + kCertificateTol) {
    cert.note = "comparator search converged to a non-passing point";
    return cert;
  }
  cert.status = PreservesRegretCertificate::Status::Certified;
  cert.regret_x = traj.back().regret_x;
  cert.regret_w = meta_regret(traj, cert.comparator);
  cert.regret_chain_holds = cert.regret_x <= cert.regret_w + kCertificateTol;
  return cert;
}

// ---- bound reports ---------------------------------------------------------

enum class BoundStatus { Pass, Fail, NotApplicable };

inline std::string_view to_string(BoundStatus s) {
  switch (s) {
    case BoundStatus::Pass: return "pass";
    case BoundStatus::Fail: return "fail";
    case BoundStatus::NotApplicable: return "not applicable";
  }
  return "?";
}

struct BoundConstant {
  std::string name;
  double value = kNaN;
  std::string provenance;  ///< "estimated", "configured" or "measured"
};

struct BoundReport {
  std::string claim;
  BoundStatus status = BoundStatus::NotApplicable;
  double bound = kNaN;
  double gap = kNaN;
  double margin = kNaN;
  double comparator_bound = kNaN;  ///< same bound with ||w* - c||^2 in place of the diameter
  double full_bound = kNaN;        ///< un-simplified expression, when evaluated
  int horizon = 0;
  std::vector<BoundConstant> constants;
  std::string note;

  bool pass() const { return status == BoundStatus::Pass; }
};

inline constexpr double kBoundSlack = 1e-9;

/// lambda L D / T.
inline double mg_bound_value(double lambda, double smoothness, double squared_diameter, int horizon) {
  return lambda * smoothness * squared_diameter / static_cast<double>(horizon);
}

/// 4 q L D / (T^2 - 1).
inline double omg_bound_value(double lambda_tilde, double smoothness, double squared_diameter,
                              int horizon) {
  if (horizon <= 1) throw std::invalid_argument("accelerated bound needs T >= 2");
  const double T = horizon;
  return 4.0 * lambda_tilde * smoothness * squared_diameter / (T * T - 1.0);
}

namespace detail {

inline double squared_diameter_or_comparator(const ConstraintSet& constraint, const Vector& w_star,
                                             const Vector& anchor) {
  return constraint.bounded() ? constraint.squared_diameter() : (w_star - anchor).squaredNorm();
}

}  // namespace detail

/// Checks gap <= lambda L D / T on a run with alpha_t = 1 and beta = 1 / (lambda L).
///
/// Returns NotApplicable when the run violates these preconditions, the rule
/// is not affine, or `certificate` did not certify a comparator.
inline BoundReport check_bound_mg(const Trajectory& traj, const UpdateRule& rule,
                                  double lambda_est, double smoothness,
                                  const ConstraintSet& constraint,
                                  const PreservesRegretCertificate& certificate) {
  BoundReport rep;
  rep.claim = "meta-gradient O(1/T)";
  rep.horizon = traj.horizon();
  rep.gap = traj.final_gap();
  rep.constants = {{"lambda", lambda_est, "estimated"},
                   {"L", smoothness, "configured"},
                   {"T", static_cast<double>(rep.horizon), "configured"}};
  const double beta_expected = 1.0 / (lambda_est * smoothness);
  std::string why;
  for (const auto& r : traj.steps) {
    if (r.alpha != 1.0) { why = "alpha_t != 1"; break; }
    if (std::abs(r.beta - beta_expected) > 1e-12 * beta_expected) {
      why = "beta != 1/(lambda L)";
      break;
    }
  }
  if (why.empty() && !rule.affine_in_w()) why = "update rule is not affine in w";
  if (why.empty() && !certificate.pass()) why = "no preserves-regret comparator certified";
  if (why.empty() && traj.driver != "convex") why = "not an averaged FTRL run";
  rep.constants.push_back({"beta", traj.steps.empty() ? kNaN : traj.back().beta, "configured"});
  if (!why.empty()) {
    rep.status = BoundStatus::NotApplicable;
    rep.note = why;
    return rep;
  }

  const Vector& w_star = certificate.comparator;
  const double comp_sq = (w_star - traj.meta_anchor).squaredNorm();
  const double diam = detail::squared_diameter_or_comparator(constraint, w_star, traj.meta_anchor);
  rep.constants.push_back({"diam", diam, constraint.bounded() ? "configured" : "measured"});
  rep.constants.push_back({"||w*-c||^2", comp_sq, "measured"});
  rep.bound = mg_bound_value(lambda_est, smoothness, diam, rep.horizon);
  rep.comparator_bound = mg_bound_value(lambda_est, smoothness, comp_sq, rep.horizon);

  // Un-simplified form with the negative gradient-difference terms.
  const double beta = beta_expected;
  double sum = comp_sq / beta;
  for (int t = 1; t <= rep.horizon; ++t) {
    const StepRecord& r = traj.at(t);
    const Vector& g = r.grad;
    const Vector g_prev = t == 1 ? Vector(g) : Vector(traj.at(t - 1).grad);
    const Vector g_star = Vector::Zero(g.size());
    sum += lambda_est * beta * r.alpha * r.alpha * 0.5 * g.squaredNorm() -
           r.alpha / (2.0 * smoothness) * (g - g_star).squaredNorm() -
           (r.alpha_prefix - r.alpha) / (2.0 * smoothness) * (g_prev - g).squaredNorm();
  }
  rep.full_bound = sum / traj.back().alpha_prefix;

  rep.margin = rep.bound - rep.gap;
  rep.status = rep.margin >= -kBoundSlack ? BoundStatus::Pass : BoundStatus::Fail;
  return rep;
}

/// max over t >= 2 of ||g_t - g~_t||^2 / ||grad f(xbar_t) - grad f(xbar_{t-1})||^2.
/// Step 1 is skipped: beta_1 = 0 removes it from the bound.
inline double measured_lambda_tilde(const Trajectory& traj) {
  double worst = 0.0;
  for (int t = 2; t <= traj.horizon(); ++t) {
    const StepRecord& r = traj.at(t);
    const double denom = (r.grad - traj.at(t - 1).grad).squaredNorm();
    const double num = (r.meta_grad - r.hint).squaredNorm();
    if (denom == 0.0) {
      if (num > 0.0) return kInf;
      continue;
    }
    worst = std::max(worst, num / denom);
  }
  return worst;
}

/// Checks gap <= 4 q L D / (T^2 - 1) for optimistic FTRL with alpha_t = t and
/// beta_t = (t - 1) / (2 t q L). NotApplicable if the schedule differs or the
/// measured ratio exceeds q.
inline BoundReport check_bound_omg(const Trajectory& traj, double lambda_tilde, double smoothness,
                                   const ConstraintSet& constraint,
                                   const std::optional<Vector>& w_star = std::nullopt) {
  if (traj.horizon() <= 1) throw std::invalid_argument("check_bound_omg: T must be >= 2");
  BoundReport rep;
  rep.claim = "optimistic meta-gradient O(1/T^2)";
  rep.horizon = traj.horizon();
  rep.gap = traj.final_gap();
  const double measured = measured_lambda_tilde(traj);
  rep.constants = {{"lambda_tilde", lambda_tilde, "estimated"},
                   {"lambda_tilde_measured", measured, "measured"},
                   {"L", smoothness, "configured"},
                   {"T", static_cast<double>(rep.horizon), "configured"}};
  std::string why;
  for (const auto& r : traj.steps) {
    const double td = r.t;
    const double expected = (td - 1.0) / (2.0 * td * lambda_tilde * smoothness);
    if (r.alpha != td) { why = "alpha_t != t"; break; }
    if (std::abs(r.beta - expected) > 1e-12 * std::max(expected, 1e-300)) {
      why = "beta_t does not follow (t-1)/(2 t q L)";
      break;
    }
  }
  if (why.empty() && measured > lambda_tilde * (1.0 + 1e-9)) {
    why = "measured hint ratio exceeds lambda_tilde";
  }
  if (why.empty() && traj.driver != "optimistic") why = "not an optimistic FTRL run";
  if (!why.empty()) {
    rep.status = BoundStatus::NotApplicable;
    rep.note = why;
    return rep;
  }
  const Vector comparator = w_star.value_or(traj.x_star.value_or(Vector::Zero(traj.w1.size())));
  const double comp_sq = (comparator - traj.meta_anchor).squaredNorm();
  const double diam = detail::squared_diameter_or_comparator(constraint, comparator, traj.meta_anchor);
  rep.constants.push_back({"diam", diam, constraint.bounded() ? "configured" : "measured"});
  rep.constants.push_back({"||w*-c||^2", comp_sq, "measured"});
  rep.bound = omg_bound_value(lambda_tilde, smoothness, diam, rep.horizon);
  rep.comparator_bound = omg_bound_value(lambda_tilde, smoothness, comp_sq, rep.horizon);
  rep.margin = rep.bound - rep.gap;
  rep.status = rep.margin >= -kBoundSlack ? BoundStatus::Pass : BoundStatus::Fail;
  return rep;
}

// ---- regret diagnostics -----------------------------------------------------

struct RegretBoundCheck {
  double regret = kNaN;
  double bound = kNaN;
  bool holds = false;
};

/// FTRL regret against comparator u:
///   R^w(u) <= ||u - c||^2 / beta_T + 1/2 sum_t alpha_t^2 beta_t ||g_t - g~_t||^2.
inline RegretBoundCheck ftrl_regret_bound_check(const Trajectory& traj, const Vector& comparator,
                                                double slack = kBoundSlack) {
  RegretBoundCheck out;
  out.regret = meta_regret(traj, comparator);
  double stability = 0.0;
  for (const auto& r : traj.steps) {
    stability += 0.5 * r.alpha * r.alpha * r.beta * (r.meta_grad - r.hint).squaredNorm();
  }
  const double beta_T = traj.back().beta;
  const double reg = (comparator - traj.meta_anchor).squaredNorm();
  out.bound = (reg == 0.0 ? 0.0 : reg / beta_T) + stability;
  out.holds = out.regret <= out.bound + slack;
  return out;
}

struct OnlineToBatchCheck {
  double lhs = kNaN;  ///< alpha_{1:T} (f(xbar_T) - f*)
  double rhs = kNaN;  ///< R^x - smoothness corrections
  double tolerance = kNaN;
  bool holds = false;
};

/// alpha_{1:T} (f(xbar_T) - f*) <= R^x(T)
///   - sum_t [alpha_t/(2L) ||grad f(xbar_t) - grad f(x*)||^2
///            + alpha_{1:t-1}/(2L) ||grad f(xbar_{t-1}) - grad f(xbar_t)||^2]
/// with relative tolerance 1e-7 max(1, |R^x|).
inline OnlineToBatchCheck online_to_batch_check(const Trajectory& traj, const Objective& objective,
                                                double smoothness, double rel_tol = 1e-7) {
  OnlineToBatchCheck out;
  if (!traj.x_star || traj.steps.empty()) return out;
  const Vector grad_star = objective.gradient(*traj.x_star);
  const double regret = traj.back().regret_x;
  double correction = 0.0;
  Vector grad_prev = objective.gradient(traj.xbar0);
  for (const auto& r : traj.steps) {
    correction += r.alpha / (2.0 * smoothness) * (r.grad - grad_star).squaredNorm() +
                  (r.alpha_prefix - r.alpha) / (2.0 * smoothness) * (grad_prev - r.grad).squaredNorm();
    grad_prev = r.grad;
  }
  out.lhs = traj.back().alpha_prefix * traj.final_gap();
  out.rhs = regret - correction;
  out.tolerance = rel_tol * std::max(1.0, std::abs(regret));
  out.holds = out.lhs <= out.rhs + out.tolerance;
  return out;
}

// ---- JSON views -------------------------------------------------------------

inline nlohmann::json to_json(const BoundReport& rep) {
  nlohmann::json constants = nlohmann::json::array();
  for (const auto& c : rep.constants) {
    constants.push_back({{"name", c.name}, {"value", c.value}, {"provenance", c.provenance}});
  }
  return {{"claim", rep.claim},   {"status", std::string(to_string(rep.status))},
          {"bound", rep.bound},       {"gap", rep.gap},
          {"margin", rep.margin},     {"comparator_bound", rep.comparator_bound},
          {"full_bound", rep.full_bound}, {"T", rep.horizon},
          {"constants", constants},   {"note", rep.note}};
}

inline nlohmann::json to_json(const ReductionCertificate& cert) {
  nlohmann::json out{{"name", cert.name},
                     {"pass", cert.pass},
                     {"max_residual", cert.max_residual},
                     {"max_momentum_error", cert.max_momentum_error},
                     {"max_fitted_momentum_error", cert.max_fitted_momentum_error},
                     {"max_fitted_step_error", cert.max_fitted_step_error},
                     {"max_recursion_error", cert.max_recursion_error},
                     {"failure", cert.failure}};
  if (cert.rate) out["exponent"] = cert.rate->exponent;
  if (cert.first_failure) out["first_failure"] = *cert.first_failure;
  return out;
}

}  // namespace metaopt

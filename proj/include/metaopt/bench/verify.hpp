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

// Desk-scale verification suite. Each function checks one acceptance
// criterion and returns a JSON-serialisable result; tolerances are the
// constants below.

#include "metaopt/analysis.hpp"
#include "metaopt/bench/config.hpp"
#include "metaopt/bench/sweep.hpp"
#include "metaopt/drivers.hpp"
#include "metaopt/optimism_bmg.hpp"
#include "metaopt/problems.hpp"
#include "metaopt/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace metaopt::bench {

namespace tol {
inline constexpr double kHeavyBallResidual = 1e-9;
inline constexpr double kHeavyBallMomentum = 1e-10;
inline constexpr double kNesterovRecursion = 1e-9;
inline constexpr double kAcceleratedExponent = 1.8;
inline constexpr double kBoundSlack = 1e-9;
inline constexpr double kSlowExponentLow = 0.8;
inline constexpr double kSlowExponentHigh = 1.5;
inline constexpr double kRegretSlack = 1e-9;
inline constexpr double kOnlineToBatchRelative = 1e-7;
inline constexpr double kHintRoundTrip = 1e-10;
inline constexpr double kTrajectoryMatch = 1e-8;
inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kFiniteDifference = 1e-6;
inline constexpr int kMetaVsBaselineWins = 4;
}  // namespace tol

enum class CriterionStatus { Pass, Fail, NotApplicable };

inline std::string_view to_string(CriterionStatus s) {
  switch (s) {
    case CriterionStatus::Pass: return "PASS";
    case CriterionStatus::Fail: return "FAIL";
    case CriterionStatus::NotApplicable: return "N/A";
  }
  return "?";
}

struct CriterionResult {
  int id = 0;
  std::string name;
  CriterionStatus status = CriterionStatus::Fail;
  std::string detail;
  /// Worst-case bound row for bound checks.
  double bound = kNaN;
  double gap = kNaN;
  double margin = kNaN;
  nlohmann::json data = nlohmann::json::object();

  bool passed() const { return status == CriterionStatus::Pass; }
};

inline CriterionResult make_result(int id, std::string name) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  return r;
}

inline nlohmann::json to_json(const CriterionResult& r) {
  return {{"id", r.id},
          {"name", r.name},
          {"status", std::string(to_string(r.status))},
          {"detail", r.detail},
          {"bound", real_to_json(r.bound)},
          {"gap", real_to_json(r.gap)},
          {"margin", real_to_json(r.margin)},
          {"data", r.data}};
}

namespace detail {

inline std::string fmt(double v, const char* spec = "%.3g") {
  if (!std::isfinite(v)) return format_real(v);
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline CriterionStatus status_of(bool ok) { return ok ? CriterionStatus::Pass : CriterionStatus::Fail; }

/// The ball around the minimiser used by the bound checks: radius ||x0||, so w_1 = x0 lies on it.
inline ConstraintSet bound_ball(const Vector& x0) {
  return ConstraintSet::ball(Vector::Zero(x0.size()), x0.norm());
}

inline constexpr int kLambdaSamples = 200;

struct BoundSetup {
  QuadraticProblem problem;
  Vector x0;
  ConstraintSet ball;
  double smoothness;
};

inline BoundSetup bound_setup(int dim, std::uint64_t seed) {
  QuadraticProblem p = gen_quadratic(dim, seed);
  const Vector x0 = Vector::Constant(dim, 4.0);
  const double L = p.lipschitz();
  return {std::move(p), x0, bound_ball(x0), L};
}

inline Trajectory slow_run(const BoundSetup& s, double beta, int horizon) {
  auto meta = MetaLearnerState::create(BetaSchedule::constant(beta), s.ball, s.x0);
  return run_convex(s.problem, UpdateRule::direct(s.problem.dim()), WeightSchedule::constant_one(),
                    std::move(meta), horizon, s.x0, s.x0);
}

inline Trajectory accelerated_run(const BoundSetup& s, double lambda_tilde, int horizon) {
  auto meta = MetaLearnerState::create(BetaSchedule::accelerated(lambda_tilde, s.smoothness),
                                       s.ball, s.x0);
  return run_optimistic(s.problem, UpdateRule::direct(s.problem.dim()), WeightSchedule::linear(),
                        std::move(meta), PrevMetaGradHint{}, horizon, s.x0, s.x0);
}

/// lambda_tilde measured on a pilot run of the accelerated schedule with q = 1.
inline double estimate_lambda_tilde(const BoundSetup& s, int horizon) {
  return measured_lambda_tilde(accelerated_run(s, 1.0, horizon));
}

inline void track_worst(CriterionResult& out, const BoundReport& rep) {
  if (!std::isfinite(out.margin) || rep.margin < out.margin) {
    out.bound = rep.bound;
    out.gap = rep.gap;
    out.margin = rep.margin;
  }
}

}  // namespace detail

// ---- 1: momentum reduction ---------------------------------------------------

inline CriterionResult verify_heavy_ball_reduction(const VerifySpec& spec, int horizon = 40) {
  CriterionResult out = make_result(1, "heavy-ball reduction");
  bool ok = true;
  double worst_residual = 0.0, worst_momentum = 0.0, quarter_step_gap = 0.0, derived_gap = 0.0;
  nlohmann::json runs = nlohmann::json::array();
  for (int dim : spec.dims) {
    for (std::uint64_t seed : spec.seeds) {
      const QuadraticProblem p = gen_quadratic(dim, seed);
      const double L = p.lipschitz();
      for (double beta : {1.0 / (2.0 * L), 1.0 / (4.0 * L), 0.1 / L}) {
        const ReductionCertificate cert = certify_heavy_ball_reduction(p, beta, horizon);
        ok = ok && cert.pass && cert.max_residual <= tol::kHeavyBallResidual &&
             cert.max_momentum_error <= tol::kHeavyBallMomentum;
        worst_residual = std::max(worst_residual, cert.max_residual);
        worst_momentum = std::max(worst_momentum, cert.max_momentum_error);
        if (beta == 1.0 / (2.0 * L)) {
          // Compare the fitted step sizes with the quarter-step form t / (4 (t + 1) L)
          // and with the derived 2 beta (t - 1) / (t + 1).
          for (std::size_t i = 0; i < cert.fitted_step.size(); ++i) {
            const double t = static_cast<double>(i) + 2.0;
            quarter_step_gap = std::max(quarter_step_gap,
                                        std::abs(cert.fitted_step[i] - t / (4.0 * (t + 1.0) * L)) * L);
            derived_gap = std::max(derived_gap,
                                   std::abs(cert.fitted_step[i] - heavy_ball_step_closed_form(
                                                                      static_cast<int>(t), beta)) * L);
          }
        }
        runs.push_back({{"dim", dim}, {"seed", seed}, {"beta_L", beta * L},
                        {"pass", cert.pass}, {"max_residual", cert.max_residual}});
      }
    }
  }
  out.status = detail::status_of(ok);
  out.detail = "max residual " + detail::fmt(worst_residual) + ", max |rho~ - (t-2)/(t+1)| " +
               detail::fmt(worst_momentum) + "; fitted step vs t/(4(t+1)L) (x L) " +
               detail::fmt(quarter_step_gap) + ", vs 2 beta (t-1)/(t+1) " + detail::fmt(derived_gap);
  out.data = {{"max_residual", worst_residual},
              {"max_momentum_error", worst_momentum},
              {"quarter_step_deviation_times_L", quarter_step_gap},
              {"derived_step_deviation_times_L", derived_gap},
              {"runs", runs}};
  return out;
}

// ---- 2: accelerated reduction --------------------------------------------------

inline const std::vector<int> kRateHorizons{25, 50, 100, 200, 400};

inline CriterionResult verify_nesterov_reduction(const VerifySpec& spec) {
  CriterionResult out = make_result(2, "nesterov reduction");
  bool ok = true;
  double worst_recursion = 0.0, min_exponent = kInf;
  for (int dim : spec.dims) {
    for (std::uint64_t seed : spec.seeds) {
      const ReductionCertificate cert =
          certify_nesterov_reduction(gen_quadratic(dim, seed), kRateHorizons);
      ok = ok && cert.pass && cert.max_recursion_error <= tol::kNesterovRecursion &&
           cert.rate && cert.rate->exponent >= tol::kAcceleratedExponent;
      worst_recursion = std::max(worst_recursion, cert.max_recursion_error);
      if (cert.rate) min_exponent = std::min(min_exponent, cert.rate->exponent);
    }
  }
  out.status = detail::status_of(ok);
  out.detail = "max recursion error " + detail::fmt(worst_recursion) + ", min exponent " +
               detail::fmt(min_exponent);
  out.data = {{"max_recursion_error", worst_recursion}, {"min_exponent", min_exponent}};
  return out;
}

// ---- 3: O(1/T) bound -----------------------------------------------------------

inline CriterionResult verify_mg_bound(const VerifySpec& spec) {
  CriterionResult out = make_result(3, "meta-gradient O(1/T) bound");
  bool any_fail = false, any_na = false;
  bool regret_chain = true;
  std::string na_reason;
  nlohmann::json reports = nlohmann::json::array();
  for (int dim : spec.dims) {
    for (std::uint64_t seed : spec.seeds) {
      const auto s = detail::bound_setup(dim, seed);
      const UpdateRule rule = UpdateRule::direct(dim);
      const double lambda = estimate_lambda(rule, s.problem, detail::kLambdaSamples, s.ball, seed);
      const double beta = spec.mg_beta_multiplier / (lambda * s.smoothness);
      const Trajectory full = detail::slow_run(s, beta, 200);
      for (int T : {50, 100, 200}) {
        const Trajectory traj = full.truncated(T);
        const auto cert = certify_preserves_regret(traj, s.problem, rule, s.ball);
        regret_chain = regret_chain && cert.pass() && cert.regret_chain_holds;
        const BoundReport rep = check_bound_mg(traj, rule, lambda, s.smoothness, s.ball, cert);
        if (rep.status == BoundStatus::Fail || (rep.pass() && rep.margin < -tol::kBoundSlack)) {
          any_fail = true;
        }
        if (rep.status == BoundStatus::NotApplicable) {
          any_na = true;
          na_reason = rep.note;
        } else {
          detail::track_worst(out, rep);
        }
        nlohmann::json j = to_json(rep);
        j["dim"] = dim;
        j["seed"] = seed;
        reports.push_back(std::move(j));
      }
    }
  }
  out.status = any_fail ? CriterionStatus::Fail
               : any_na ? CriterionStatus::NotApplicable
                        : CriterionStatus::Pass;
  out.detail = any_na ? "not applicable: " + na_reason
                      : "worst margin " + detail::fmt(out.margin) +
                            (regret_chain ? "; R^x <= R^w(w*) on every run" : "; regret chain violated");
  out.data = {{"reports", reports}, {"regret_chain_holds", regret_chain}};
  return out;
}

// ---- 4: O(1/T^2) bound ---------------------------------------------------------

inline CriterionResult verify_omg_bound(const VerifySpec& spec) {
  CriterionResult out = make_result(4, "optimistic O(1/T^2) bound");
  bool any_fail = false, any_na = false;
  std::string na_reason;
  nlohmann::json reports = nlohmann::json::array();
  for (int dim : spec.dims) {
    for (std::uint64_t seed : spec.seeds) {
      const auto s = detail::bound_setup(dim, seed);
      const double lambda_tilde = detail::estimate_lambda_tilde(s, 100);
      const Trajectory full = detail::accelerated_run(s, lambda_tilde, 100);
      for (int T : {9, 50, 100}) {
        const BoundReport rep =
            check_bound_omg(full.truncated(T), lambda_tilde, s.smoothness, s.ball, Vector::Zero(dim));
        if (rep.status == BoundStatus::Fail || (rep.pass() && rep.margin < -tol::kBoundSlack)) {
          any_fail = true;
        }
        if (rep.status == BoundStatus::NotApplicable) {
          any_na = true;
          na_reason = rep.note;
        } else {
          detail::track_worst(out, rep);
        }
        nlohmann::json j = to_json(rep);
        j["dim"] = dim;
        j["seed"] = seed;
        reports.push_back(std::move(j));
      }
    }
  }
  out.status = any_fail ? CriterionStatus::Fail
               : any_na ? CriterionStatus::NotApplicable
                        : CriterionStatus::Pass;
  out.detail = any_na ? "not applicable: " + na_reason : "worst margin " + detail::fmt(out.margin);
  out.data = {{"reports", reports}};
  return out;
}

// ---- 5: rate separation ---------------------------------------------------------

inline CriterionResult verify_rate_separation(const VerifySpec& spec) {
  CriterionResult out = make_result(5, "rate separation");
  const int T = kRateHorizons.back();
  const std::vector<double> ts(kRateHorizons.begin(), kRateHorizons.end());
  bool slow_ok = true, fast_ok = true;
  double slow_min = kInf, slow_max = -kInf, fast_min = kInf;
  nlohmann::json runs = nlohmann::json::array();
  for (int dim : spec.dims) {
    for (std::uint64_t seed : spec.seeds) {
      const auto s = detail::bound_setup(dim, seed);
      const double lambda =
          estimate_lambda(UpdateRule::direct(dim), s.problem, detail::kLambdaSamples, s.ball, seed);
      const Trajectory slow = detail::slow_run(s, 1.0 / (lambda * s.smoothness), T);
      const Trajectory fast = detail::accelerated_run(s, detail::estimate_lambda_tilde(s, T), T);
      const RateFit slow_fit = fit_rate(ts, gaps_at(slow, kRateHorizons));
      const RateFit fast_fit = fit_rate(ts, gaps_at(fast, kRateHorizons));
      const RateFit slow_curve = fit_rate_curve(slow);
      slow_ok = slow_ok && slow_fit.exponent >= tol::kSlowExponentLow &&
                slow_fit.exponent <= tol::kSlowExponentHigh;
      fast_ok = fast_ok && fast_fit.exponent >= tol::kAcceleratedExponent;
      slow_min = std::min(slow_min, slow_fit.exponent);
      slow_max = std::max(slow_max, slow_fit.exponent);
      fast_min = std::min(fast_min, fast_fit.exponent);
      runs.push_back({{"dim", dim},
                      {"seed", seed},
                      {"convex_exponent", slow_fit.exponent},
                      {"convex_curve_exponent", slow_curve.exponent},
                      {"optimistic_exponent", fast_fit.exponent}});
    }
  }
  out.status = detail::status_of(slow_ok && fast_ok);
  out.detail = "convex exponents in [" + detail::fmt(slow_min) + ", " + detail::fmt(slow_max) +
               "] (target [0.8, 1.5]), optimistic min " + detail::fmt(fast_min) + " (target >= 1.8)";
  out.data = {{"runs", runs}, {"convex_in_window", slow_ok}, {"optimistic_fast", fast_ok}};
  return out;
}

// ---- 6: FTRL regret bound -------------------------------------------------------

inline CriterionResult verify_ftrl_regret(const VerifySpec& spec, int comparators = 20) {
  CriterionResult out = make_result(6, "FTRL regret bound");
  bool ok = true;
  double worst = kInf;
  int checks = 0;
  for (int dim : spec.dims) {
    for (std::uint64_t seed : spec.seeds) {
      const auto s = detail::bound_setup(dim, seed);
      const double L = s.smoothness;
      std::vector<Trajectory> runs;
      runs.push_back(detail::slow_run(s, 1.0 / L, 100));
      runs.push_back(detail::accelerated_run(s, 1.0, 100));
      {
        auto meta = MetaLearnerState::create(BetaSchedule::constant(0.5 / L), s.ball, s.x0);
        runs.push_back(run_optimistic(s.problem, UpdateRule::direct(dim), WeightSchedule::constant_one(),
                                      std::move(meta), PrevGradientHint{}, 100, s.x0, s.x0));
      }
      Rng rng(seed ^ 0x5eedULL);
      for (const auto& traj : runs) {
        for (int k = 0; k < comparators; ++k) {
          const RegretBoundCheck c = ftrl_regret_bound_check(traj, s.ball.sample(rng), tol::kRegretSlack);
          ok = ok && c.holds;
          worst = std::min(worst, c.bound - c.regret);
          ++checks;
        }
      }
    }
  }
  out.status = detail::status_of(ok);
  out.detail = std::to_string(checks) + " comparators, min slack " + detail::fmt(worst);
  out.data = {{"checks", checks}, {"min_slack", worst}};
  return out;
}

// ---- 7: online-to-batch ---------------------------------------------------------

inline CriterionResult verify_online_to_batch(const VerifySpec& spec) {
  CriterionResult out = make_result(7, "online-to-batch inequality");
  bool ok = true;
  double worst = kInf;
  int checks = 0;
  for (int dim : spec.dims) {
    for (std::uint64_t seed : spec.seeds) {
      const auto s = detail::bound_setup(dim, seed);
      const double L = s.smoothness;
      std::vector<Trajectory> runs;
      for (double b : {1.0 / L, 0.3 / L}) runs.push_back(detail::slow_run(s, b, 200));
      {
        auto meta = MetaLearnerState::create(BetaSchedule::constant(0.5 / L),
                                             ConstraintSet::unconstrained(dim), s.x0);
        runs.push_back(run_convex(s.problem, UpdateRule::direct(dim), WeightSchedule::linear(),
                                  std::move(meta), 200, s.x0, s.x0));
      }
      runs.push_back(detail::accelerated_run(s, 1.0, 200));
      for (const auto& traj : runs) {
        for (int T : {10, 50, 200}) {
          const OnlineToBatchCheck c = online_to_batch_check(traj.truncated(T), s.problem, L,
                                                             tol::kOnlineToBatchRelative);
          ok = ok && c.holds;
          worst = std::min(worst, (c.rhs + c.tolerance - c.lhs) / std::max(1.0, std::abs(c.rhs)));
          ++checks;
        }
      }
    }
  }
  out.status = detail::status_of(ok);
  out.detail = std::to_string(checks) + " trajectory prefixes, min relative slack " + detail::fmt(worst);
  out.data = {{"checks", checks}, {"min_relative_slack", worst}};
  return out;
}

// ---- 8: hint/target isomorphism -------------------------------------------------

inline CriterionResult verify_isomorphism(const VerifySpec& spec, int horizon = 50) {
  CriterionResult out = make_result(8, "hint/target isomorphism");
  const int n = 3;
  double round_trip = 0.0, bmg_match = 0.0, recursion = 0.0;
  const std::vector<std::uint64_t> seeds(spec.seeds.begin(),
                                         spec.seeds.begin() + std::min<std::size_t>(3, spec.seeds.size()));
  const WeightSchedule unit = WeightSchedule::constant_one();
  for (int which = 0; which < 2; ++which) {
    for (std::uint64_t seed : seeds) {
      const QuadraticProblem p = gen_quadratic(n, seed);
      const double L = p.lipschitz();
      const DistanceGenerator dgf = which == 0 ? DistanceGenerator::half_squared_euclidean(n)
                                               : DistanceGenerator::matching(p);
      const Vector x0 = Vector::Constant(n, 1.0);
      for (RuleKind kind : {RuleKind::Direct, RuleKind::ElementwiseLR}) {
        const UpdateRule rule = UpdateRule::of_kind(kind, n);
        const bool direct = kind == RuleKind::Direct;
        const Vector w1 = direct ? Vector(-0.1 / L * p.gradient(x0)) : Vector(Vector::Constant(n, 0.1 / L));
        const double beta = direct ? 0.05 / L : 1e-3 / (L * L * L);
        const TangentSource source = tangent_prev_gradient();

        // AO-FTRL hints -> BMG targets: the two w-sequences coincide.
        ConvexOptions additive;
        additive.form = IterateForm::Additive;
        const Trajectory ftrl = run_optimistic(
            p, rule, unit,
            MetaLearnerState::create(BetaSchedule::constant(beta), ConstraintSet::unconstrained(n), w1),
            InducedTangentHint(source), horizon, x0, w1, additive);
        const Trajectory bmg = run_bmg(p, rule, HintDrivenTargetOracle(source, dgf), dgf,
                                       BetaSchedule::constant(beta), horizon, x0, w1);
        for (int t = 1; t <= horizon; ++t) {
          bmg_match = std::max(bmg_match, (ftrl.at(t).w - bmg.at(t).w).norm());
        }

        // hints -> targets -> hints on arbitrary tangents.
        Rng rng(seed * 31 + static_cast<std::uint64_t>(which));
        std::vector<Vector> tangents;
        for (int t = 0; t < horizon; ++t) tangents.push_back(rng.normal_vector(n));
        const auto targets = targets_from_hints(tangents, ftrl.steps, dgf, unit);
        const auto back = hints_from_targets(targets, ftrl.steps, p, rule, dgf, unit);
        const auto direct_hints = induced_hints(tangents, ftrl.steps, p, rule, unit);
        for (std::size_t i = 0; i < back.size(); ++i) {
          round_trip = std::max(round_trip, (back[i] - direct_hints[i]).cwiseAbs().maxCoeff());
        }

        // BMG targets -> AO-FTRL hints (averaged form): w follows the
        // bootstrapped recursion with the target mismatch in place of the gradient.
        // The bootstrapped tangent amplifies the Direct rule; a smaller step keeps it bounded.
        const double target_beta = direct ? 0.002 / L : beta;
        auto oracle = std::make_shared<TangentTargetOracle>();
        const Trajectory avg = run_optimistic(
            p, rule, unit,
            MetaLearnerState::create(BetaSchedule::constant(target_beta),
                                     ConstraintSet::unconstrained(n), w1),
            TargetDerivedHint(oracle, dgf), horizon, x0, w1);
        for (int t = 1; t < horizon; ++t) {
          const StepRecord& r = avg.at(t);
          const HintContext ctx{p, rule, unit, std::span<const StepRecord>(avg.steps.data(), t)};
          const Vector z = oracle->target(ctx).z;
          const Vector predicted =
              r.w - target_beta * jtvp(rule, p, r.jac_point, r.w, dgf.gradient(r.xbar) - dgf.gradient(z));
          recursion = std::max(recursion, (predicted - avg.at(t + 1).w).norm());
        }
      }
    }
  }
  const bool ok = round_trip <= tol::kHintRoundTrip && bmg_match <= tol::kTrajectoryMatch &&
                  recursion <= tol::kTrajectoryMatch;
  out.status = detail::status_of(ok);
  out.detail = "round trip " + detail::fmt(round_trip) + ", BMG vs AO-FTRL w " +
               detail::fmt(bmg_match) + ", target recursion " + detail::fmt(recursion);
  out.data = {{"hint_round_trip", round_trip},
              {"bmg_vs_ftrl", bmg_match},
              {"target_recursion", recursion}};
  return out;
}

// ---- 9: Jacobians ---------------------------------------------------------------

/// max |jtvp - central difference of w -> <v, phi(x, w)>| over random samples.
///
/// x ~ U[-2, 2]^n, v ~ N(0, I), w ~ U[0.5, 2]^m: positive so that the
/// AdaGrad-style rule is evaluated away from its floor.
inline double jacobian_error(const UpdateRule& rule, const Objective& objective, int samples,
                             std::uint64_t seed, double h = tol::kFiniteDifferenceStep) {
  Rng rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vector x = rng.uniform_vector(rule.param_dim, -2.0, 2.0);
    const Vector w = rng.uniform_vector(rule.meta_dim, 0.5, 2.0);
    const Vector v = rng.normal_vector(rule.param_dim);
    const Vector analytic = jtvp(rule, objective, x, w, v);
    for (Index j = 0; j < rule.meta_dim; ++j) {
      Vector wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd = (apply(rule, objective, x, wp) - apply(rule, objective, x, wm)).dot(v) / (2.0 * h);
      worst = std::max(worst, std::abs(analytic[j] - fd));
    }
  }
  return worst;
}

inline CriterionResult verify_jacobians(const VerifySpec& spec) {
  CriterionResult out = make_result(9, "jacobian-vector products");
  bool ok = true;
  nlohmann::json errors = nlohmann::json::object();
  std::string detail;
  const QuadraticProblem p = gen_quadratic(4, spec.seeds.front());
  for (RuleKind kind : {RuleKind::Direct, RuleKind::ElementwiseLR, RuleKind::AdaGradStyle,
                        RuleKind::PlainGradient}) {
    const double err = jacobian_error(UpdateRule::of_kind(kind, 4), p, 100, spec.seeds.front() + 17);
    ok = ok && err <= tol::kFiniteDifference;
    errors[std::string(to_string(kind))] = err;
    detail += (detail.empty() ? "" : ", ") + std::string(to_string(kind)) + " " + detail::fmt(err);
  }
  out.status = detail::status_of(ok);
  out.detail = "max abs error: " + detail;
  out.data = errors;
  return out;
}

// ---- 10: two-dimensional quadratic comparison ------------------------------------

inline CriterionResult verify_meta_vs_baseline(const VerifySpec& spec, unsigned workers = 1) {
  CriterionResult out = make_result(10, "meta-learned vs baseline (2-dim quadratics)");
  ExperimentConfig cfg = default_config(true);
  cfg.problem.seeds = spec.seeds;
  SweepOptions options;
  options.workers = workers;
  const SweepResult sweep = run_sweep(cfg, options);
  int momentum_wins = 0, adagrad_wins = 0;
  nlohmann::json per_seed = nlohmann::json::array();
  for (std::uint64_t seed : spec.seeds) {
    const auto& hb = sweep.best_for("heavy_ball", seed);
    const auto& mm = sweep.best_for("meta_momentum", seed);
    const auto& ag = sweep.best_for("adagrad", seed);
    const auto& ma = sweep.best_for("meta_adagrad", seed);
    momentum_wins += mm.cumulative_loss <= hb.cumulative_loss;
    adagrad_wins += ma.cumulative_loss <= ag.cumulative_loss;
    per_seed.push_back({{"seed", seed},
                        {"heavy_ball", hb.cumulative_loss},
                        {"meta_momentum", mm.cumulative_loss},
                        {"adagrad", ag.cumulative_loss},
                        {"meta_adagrad", ma.cumulative_loss},
                        {"meta_momentum_hyper", to_json(mm.hyper)},
                        {"meta_adagrad_hyper", to_json(ma.hyper)}});
  }
  const int need = std::min<int>(tol::kMetaVsBaselineWins, static_cast<int>(spec.seeds.size()));
  out.status = detail::status_of(momentum_wins >= need && adagrad_wins >= need);
  out.detail = "meta-momentum <= heavy-ball on " + std::to_string(momentum_wins) + "/" +
               std::to_string(spec.seeds.size()) + ", meta-adagrad <= adagrad on " +
               std::to_string(adagrad_wins) + "/" + std::to_string(spec.seeds.size()) +
               " (need " + std::to_string(need) + ")";
  out.data = {{"runs", sweep.records.size()},
              {"momentum_wins", momentum_wins},
              {"adagrad_wins", adagrad_wins},
              {"per_seed", per_seed}};
  return out;
}

// ---- 11: practical optimistic surrogate -------------------------------------------

struct SurrogateOutcome {
  double final_loss = kInf;
  double beta = kNaN;
  int frozen_steps = 0;  ///< steps at which every w coordinate was clamped to zero
};

/// Best final loss over the meta step-size grid.
inline SurrogateOutcome best_practical(const Objective& objective, const Vector& x0, const Vector& w1,
                                       PracticalOptimism optimism, double step_scale, bool nonneg,
                                       int horizon) {
  SurrogateOutcome best;
  for (double beta : kSurrogateMetaRates) {
    PracticalOptions opts;
    opts.optimism = optimism;
    opts.nonneg_w = nonneg;
    opts.step_scale = step_scale;
    try {
      const Trajectory traj = run_practical(objective, UpdateRule::elementwise_lr(objective.dim()),
                                            BetaSchedule::constant(beta), horizon, x0, w1, opts);
      const double loss = traj.back().f_x;
      if (loss < best.final_loss) {
        best.final_loss = loss;
        best.beta = beta;
        best.frozen_steps = 0;
        for (const auto& r : traj.steps) best.frozen_steps += r.w.isZero(0.0);
      }
    } catch (const DivergenceError&) {
    }
  }
  return best;
}

inline CriterionResult verify_surrogate(const VerifySpec& spec, int horizon = 100) {
  CriterionResult out = make_result(11, "optimistic practical meta-update (50-dim surrogate)");
  ProblemSpec ps;
  ps.kind = ProblemKind::NormalisedSurrogate;
  ps.dim = 50;
  int wins = 0, seeds_used = 0, descent_wins = 0;
  nlohmann::json per_seed = nlohmann::json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(3, spec.seeds.size()); ++i) {
    const std::uint64_t seed = spec.seeds[i];
    const auto objective = make_problem(ps, seed);
    const Vector x0 = ps.initial_point();
    const Vector w1 = Vector::Constant(ps.dim, 0.01);
    const auto standard = best_practical(*objective, x0, w1, PracticalOptimism::None, 1.0, true, horizon);
    const auto optimistic =
        best_practical(*objective, x0, w1, PracticalOptimism::Literal, 1.0, true, horizon);
    // Diagnostic: descent-signed form with the error-corrected optimistic step.
    const auto descent_std =
        best_practical(*objective, x0, w1, PracticalOptimism::None, -1.0, true, horizon);
    const auto descent_opt =
        best_practical(*objective, x0, w1, PracticalOptimism::ErrorCorrected, -1.0, true, horizon);
    wins += optimistic.final_loss <= standard.final_loss;
    descent_wins += descent_opt.final_loss <= descent_std.final_loss;
    ++seeds_used;
    per_seed.push_back({{"seed", seed},
                        {"initial_loss", objective->value(x0)},
                        {"standard", real_to_json(standard.final_loss)},
                        {"optimistic", real_to_json(optimistic.final_loss)},
                        {"standard_frozen_steps", standard.frozen_steps},
                        {"optimistic_frozen_steps", optimistic.frozen_steps},
                        {"descent_standard", real_to_json(descent_std.final_loss)},
                        {"descent_error_corrected", real_to_json(descent_opt.final_loss)}});
  }
  out.status = detail::status_of(wins == seeds_used);
  out.detail = "optimistic <= standard on " + std::to_string(wins) + "/" + std::to_string(seeds_used) +
               "; descent-signed error-corrected <= standard on " + std::to_string(descent_wins) +
               "/" + std::to_string(seeds_used) + " (diagnostic)";
  out.data = {{"wins", wins}, {"descent_wins", descent_wins}, {"per_seed", per_seed}};
  return out;
}

// ---- suite ------------------------------------------------------------------------

struct VerifyBundle {
  std::string config_hash;
  std::vector<CriterionResult> results;

  bool any_failed() const {
    return std::any_of(results.begin(), results.end(),
                       [](const CriterionResult& r) { return r.status == CriterionStatus::Fail; });
  }
};

inline VerifyBundle run_verify(const ExperimentConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  const VerifySpec& spec = cfg.verify;
  VerifyBundle bundle;
  bundle.config_hash = config_hash(cfg);
  bundle.results.push_back(verify_heavy_ball_reduction(spec));
  bundle.results.push_back(verify_nesterov_reduction(spec));
  bundle.results.push_back(verify_mg_bound(spec));
  bundle.results.push_back(verify_omg_bound(spec));
  bundle.results.push_back(verify_rate_separation(spec));
  bundle.results.push_back(verify_ftrl_regret(spec));
  bundle.results.push_back(verify_online_to_batch(spec));
  bundle.results.push_back(verify_isomorphism(spec));
  bundle.results.push_back(verify_jacobians(spec));
  bundle.results.push_back(verify_meta_vs_baseline(spec, workers));
  bundle.results.push_back(verify_surrogate(spec));
  return bundle;
}

inline nlohmann::json to_json(const VerifyBundle& b) {
  nlohmann::json criteria = nlohmann::json::array();
  for (const auto& r : b.results) criteria.push_back(to_json(r));
  return {{"config_hash", b.config_hash}, {"criteria", criteria}, {"failed", b.any_failed()}};
}

/// Fixed-width table: id, status, bound, gap, margin, name and detail.
inline void print_verify_table(const VerifyBundle& b, std::ostream& os) {
  char line[160];
  std::snprintf(line, sizeof line, "%-3s %-5s %-11s %-11s %-11s %s\n", "id", "stat", "bound", "gap",
                "margin", "check");
  os << line;
  for (const auto& r : b.results) {
    auto cell = [](double v) { return std::isnan(v) ? std::string("-") : detail::fmt(v, "%.4g"); };
    std::snprintf(line, sizeof line, "%-3d %-5s %-11s %-11s %-11s ", r.id,
                  std::string(to_string(r.status)).c_str(), cell(r.bound).c_str(),
                  cell(r.gap).c_str(), cell(r.margin).c_str());
    os << line << r.name << "\n    " << r.detail << "\n";
  }
}

}  // namespace metaopt::bench

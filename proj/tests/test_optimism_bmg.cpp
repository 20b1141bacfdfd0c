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


#include "metaopt/drivers.hpp"
#include "metaopt/optimism_bmg.hpp"

#include <gtest/gtest.h>

#include <vector>

namespace metaopt {
namespace {

QuadraticProblem diag14() {
  return QuadraticProblem(Vector{{1.0, 4.0}}, Matrix::Identity(2, 2));
}

MetaLearnerState meta(double beta, const Vector& anchor) {
  return MetaLearnerState::create(BetaSchedule::constant(beta),
                                  ConstraintSet::unconstrained(anchor.size()), anchor);
}

TEST(PrevMetaGradHint, DirectRuleHintIsPreviousGradient) {
  const auto p = diag14();
  const Vector start{{4.0, 4.0}};
  const auto traj = run_optimistic(p, UpdateRule::direct(2), WeightSchedule::linear(),
                                   meta(0.01, start), PrevMetaGradHint{}, 6, start, start);
  EXPECT_TRUE(traj.at(1).hint.isZero(0.0));
  for (int t = 2; t <= 6; ++t) EXPECT_EQ(traj.at(t).hint, p.gradient(traj.at(t - 1).xbar));
}

TEST(PrevMetaGradHint, ElementwiseHintEqualsRecordedMetaGradient) {
  const auto p = diag14();
  const Vector w1{{-0.01, -0.01}};
  const auto traj = run_optimistic(p, UpdateRule::elementwise_lr(2), WeightSchedule::linear(),
                                   meta(1e-5, w1), PrevMetaGradHint{}, 20, Vector{{4.0, 4.0}}, w1);
  for (int t = 2; t <= 20; ++t) EXPECT_EQ(traj.at(t).hint, traj.at(t - 1).meta_grad);
}

TEST(Bregman, HalfSquaredEuclideanValue) {
  const auto dgf = DistanceGenerator::half_squared_euclidean(2);
  EXPECT_DOUBLE_EQ(bregman(dgf, Vector::Zero(2), Vector{{3.0, 4.0}}), 12.5);
}

TEST(Bregman, ZeroOnDiagonal) {
  const Vector x{{0.3, -2.0}};
  EXPECT_EQ(bregman(DistanceGenerator::half_squared_euclidean(2), x, x), 0.0);
  EXPECT_NEAR(bregman(DistanceGenerator::matching(diag14()), x, x), 0.0, 1e-15);
}

TEST(Bregman, QuadraticFormMatchesDefinition) {
  const Matrix q = Vector{{1.0, 4.0}}.asDiagonal();
  const auto dgf = DistanceGenerator::quadratic_form(q);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const Vector z = rng.normal_vector(2), x = rng.normal_vector(2);
    const double mu_x = x.dot(q * x), mu_z = z.dot(q * z);
    const double oracle = mu_x - mu_z - (2.0 * q * z).dot(x - z);
    EXPECT_NEAR(bregman(dgf, z, x), oracle, 1e-12);
  }
}

TEST(GradInverse, EuclideanIsIdentity) {
  EXPECT_EQ(grad_inverse(DistanceGenerator::half_squared_euclidean(2), Vector{{2.0, 8.0}}),
            (Vector{{2.0, 8.0}}));
}

TEST(GradInverse, QuadraticFormSolvesTwoQ) {
  const Vector x = grad_inverse(DistanceGenerator::matching(diag14()), Vector{{2.0, 8.0}});
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  EXPECT_NEAR(x[1], 1.0, 1e-15);
}

TEST(GradInverse, RoundTripOnRandomPoints) {
  const auto dgf = DistanceGenerator::matching(gen_quadratic(5, 3));
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const Vector x = rng.normal_vector(5);
    EXPECT_LT((grad_inverse(dgf, dgf.gradient(x)) - x).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(GradInverse, RejectsIndefiniteForms) {
  EXPECT_THROW(DistanceGenerator::quadratic_form(Vector{{1.0, -1.0}}.asDiagonal()),
               std::invalid_argument);
}

Trajectory reference_run(const Objective& p, const UpdateRule& rule, const Vector& w1, int horizon) {
  return run_convex(p, rule, WeightSchedule::constant_one(), meta(1e-3, w1), horizon,
                    Vector::Ones(p.dim()), w1);
}

TEST(TargetsFromHints, ZeroTangentsGiveGradientStep) {
  const auto p = diag14();
  const auto traj = reference_run(p, UpdateRule::direct(2), Vector{{0.5, 0.5}}, 5);
  const std::vector<Vector> zeros(5, Vector::Zero(2));
  const auto targets = targets_from_hints(zeros, traj.steps,
                                          DistanceGenerator::half_squared_euclidean(2),
                                          WeightSchedule::constant_one());
  for (int t = 1; t <= 5; ++t) {
    const Vector expected = traj.at(t).xbar - p.gradient(traj.at(t).xbar);
    EXPECT_LT((targets[t - 1].z - expected).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(TargetsFromHints, RoundTripRecoversInducedHints) {
  const auto p = gen_quadratic(3, 1);
  const auto rule = UpdateRule::elementwise_lr(3);
  const auto traj = reference_run(p, rule, Vector::Constant(3, -0.01), 30);
  Rng rng(12);
  std::vector<Vector> tangents;
  for (int t = 0; t < 30; ++t) tangents.push_back(rng.normal_vector(3));
  for (const auto& dgf : {DistanceGenerator::half_squared_euclidean(3), DistanceGenerator::matching(p)}) {
    for (const auto& weights : {WeightSchedule::constant_one(), WeightSchedule::linear()}) {
      const auto targets = targets_from_hints(tangents, traj.steps, dgf, weights);
      const auto back = hints_from_targets(targets, traj.steps, p, rule, dgf, weights);
      const auto oracle = induced_hints(tangents, traj.steps, p, rule, weights);
      ASSERT_EQ(back.size(), oracle.size());
      for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_LT((back[i] - oracle[i]).cwiseAbs().maxCoeff(), 1e-10) << "i=" << i;
      }
    }
  }
}

TEST(HintsFromTargets, IdentityTargetsCollapseRecursion) {
  const auto p = diag14();
  const auto rule = UpdateRule::elementwise_lr(2);
  const auto traj = reference_run(p, rule, Vector{{-0.02, -0.02}}, 6);
  std::vector<BmgTarget> targets;
  for (const auto& r : traj.steps) targets.push_back(BmgTarget::from_point(r.xbar, r.xbar));
  const auto hints = hints_from_targets(targets, traj.steps, p, rule,
                                        DistanceGenerator::half_squared_euclidean(2),
                                        WeightSchedule::linear());
  for (int t = 1; t <= 6; ++t) {
    const auto& r = traj.at(t);
    const Vector expected =
        (-t * jtvp(rule, p, r.jac_point, r.w, r.grad) + t * hints[t - 1]) / (t + 1.0);
    EXPECT_LT((hints[t] - expected).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(BmgFromHints, DirectEuclideanMatchesOptimisticRun) {
  const auto p = gen_quadratic(3, 2);
  const double L = p.lipschitz();
  const auto rule = UpdateRule::direct(3);
  const auto dgf = DistanceGenerator::half_squared_euclidean(3);
  const Vector x0 = Vector::Ones(3);
  const Vector w1 = -0.1 / L * p.gradient(x0);
  const double beta = 0.05 / L;
  ConvexOptions additive;
  additive.form = IterateForm::Additive;
  const auto ftrl = run_optimistic(p, rule, WeightSchedule::constant_one(), meta(beta, w1),
                                   InducedTangentHint(tangent_prev_gradient()), 50, x0, w1, additive);
  const auto bmg = run_bmg(p, rule, HintDrivenTargetOracle(tangent_prev_gradient(), dgf), dgf,
                           BetaSchedule::constant(beta), 50, x0, w1);
  for (int t = 1; t <= 50; ++t) {
    EXPECT_LT((ftrl.at(t).w - bmg.at(t).w).norm(), 1e-8) << "t=" << t;
  }
}

// One-dimensional quadratic f(x) = x^2, Direct rule, beta = 0.1, alpha = 1.
struct ScalarSetup {
  QuadraticProblem p{Vector{{1.0}}, Matrix::Identity(1, 1)};
  UpdateRule rule = UpdateRule::direct(1);
  WeightSchedule weights = WeightSchedule::constant_one();
  Vector anchor{{0.3}};

  StepRecord record(const Vector& w, double x) const {
    StepRecord r;
    r.jac_point = Vector{{x}};
    r.w = w;
    r.xbar = Vector{{x + w[0]}};
    r.grad = p.gradient(r.xbar);
    return r;
  }
};

TEST(ErrorCorrectedStep, SecondStepMatchesAoftrl) {
  const ScalarSetup s;
  const Vector y2{{0.7}}, y3{{-1.1}};
  auto state = meta(0.1, s.anchor);
  auto oracle = meta(0.1, s.anchor);
  std::vector<StepRecord> prefix{s.record(state.initial_prediction(), 1.0)};
  const auto first = bmg_error_corrected_step(state, prefix, y2, Vector::Zero(1), s.p, s.rule, s.weights);
  const Vector w2 = aoftrl_step(oracle, prefix[0].grad, y2, 1.0, 1.0);
  EXPECT_NEAR(first.corrected[0], w2[0], 1e-15);

  prefix.push_back(s.record(first.corrected, prefix[0].xbar[0]));
  const auto second = bmg_error_corrected_step(state, prefix, y3, y2, s.p, s.rule, s.weights);
  const Vector w3 = aoftrl_step(oracle, prefix[1].grad, y3, 1.0, 1.0);
  EXPECT_NEAR(second.corrected[0], w3[0], 1e-14);
  // The correction is beta_t alpha_t D phi^T y~_t; Direct makes D phi the identity.
  EXPECT_NEAR(second.corrected[0] - second.uncorrected[0], 0.1 * y2[0], 1e-15);
  EXPECT_NEAR(second.correction[0], 0.1 * y2[0], 1e-15);
}

TEST(ErrorCorrectedStep, ZeroTangentsReduceToFtrl) {
  const ScalarSetup s;
  auto state = meta(0.1, s.anchor);
  auto oracle = meta(0.1, s.anchor);
  std::vector<StepRecord> prefix;
  Vector w = state.initial_prediction();
  double x = 1.0;
  for (int t = 1; t <= 10; ++t) {
    prefix.push_back(s.record(w, x));
    const auto step = bmg_error_corrected_step(state, prefix, Vector::Zero(1), Vector::Zero(1), s.p,
                                               s.rule, s.weights);
    const Vector expected = ftrl_step(oracle, prefix.back().grad, 1.0);
    EXPECT_NEAR(step.corrected[0], expected[0], 1e-14) << "t=" << t;
    EXPECT_EQ(step.correction[0], 0.0);
    x = prefix.back().xbar[0];
    w = step.corrected;
  }
}

TEST(ErrorCorrectedStep, RequiresUnconstrainedLearner) {
  const ScalarSetup s;
  auto state = MetaLearnerState::create(BetaSchedule::constant(0.1), ConstraintSet::nonnegative(1));
  std::vector<StepRecord> prefix{s.record(Vector{{0.0}}, 1.0)};
  EXPECT_THROW(bmg_error_corrected_step(state, prefix, Vector::Zero(1), Vector::Zero(1), s.p, s.rule,
                                        s.weights),
               std::invalid_argument);
}

}  // namespace
}  // namespace metaopt

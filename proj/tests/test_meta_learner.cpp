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


#include "metaopt/meta_learner.hpp"
#include "metaopt/problems.hpp"

#include <gtest/gtest.h>

#include <vector>

namespace metaopt {
namespace {

MetaLearnerState unconstrained(Index m, double beta) {
  return MetaLearnerState::create(BetaSchedule::constant(beta), ConstraintSet::unconstrained(m));
}

TEST(FtrlStep, ClosedFormMinusBetaG) {
  auto s = unconstrained(2, 0.5);
  const Vector w = ftrl_step(s, Vector{{1.0, -2.0}}, 1.0);
  EXPECT_DOUBLE_EQ(w[0], -0.5);
  EXPECT_DOUBLE_EQ(w[1], 1.0);
  EXPECT_EQ(s.step_index, 1);
}

TEST(FtrlStep, ZeroGradientsStayAtProjectedOrigin) {
  auto s = MetaLearnerState::create(BetaSchedule::constant(0.3),
                                    ConstraintSet::ball(Vector{{2.0, 0.0}}, 1.0));
  EXPECT_EQ(s.initial_prediction(), (Vector{{1.0, 0.0}}));
  for (int t = 0; t < 10; ++t) {
    const Vector w = ftrl_step(s, Vector::Zero(2), 1.0);
    EXPECT_EQ(w, (Vector{{1.0, 0.0}}));
  }
}

TEST(FtrlStep, TwoStepsMatchUnrolledSum) {
  const double beta = 0.2;
  auto s = unconstrained(3, beta);
  const Vector w1 = Vector::Zero(3);
  const Vector g1{{0.5, -1.0, 2.0}}, g2{{-3.0, 0.25, 1.0}};
  const double a1 = 1.0, a2 = 2.0;
  ftrl_step(s, g1, a1);
  const Vector w3 = ftrl_step(s, g2, a2);
  const Vector oracle = w1 - beta * a1 * g1 - beta * a2 * g2;
  EXPECT_LT((w3 - oracle).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FtrlStep, AnchorShiftsTheRegulariser) {
  auto s = MetaLearnerState::create(BetaSchedule::constant(0.5), ConstraintSet::unconstrained(1),
                                    Vector{{3.0}});
  EXPECT_DOUBLE_EQ(ftrl_step(s, Vector{{2.0}}, 1.0)[0], 2.0);
}

TEST(FtrlStep, ZeroBetaReturnsAnchor) {
  auto s = MetaLearnerState::create(BetaSchedule::accelerated(1.0, 8.0),
                                    ConstraintSet::unconstrained(2), Vector{{1.0, 1.0}});
  EXPECT_EQ(ftrl_step(s, Vector{{5.0, 5.0}}, 1.0), (Vector{{1.0, 1.0}}));
}

TEST(AoftrlStep, ZeroHintMatchesFtrl) {
  auto a = unconstrained(2, 0.1);
  auto b = unconstrained(2, 0.1);
  Rng rng(3);
  for (int t = 1; t <= 10; ++t) {
    const Vector g = rng.normal_vector(2);
    EXPECT_EQ(ftrl_step(a, g, t), aoftrl_step(b, g, Vector::Zero(2), t, t + 1));
  }
}

TEST(AoftrlStep, ScalarExample) {
  auto s = unconstrained(1, 0.1);
  // G_1 = 2, alpha_2 hint = 3.
  const Vector w2 = aoftrl_step(s, Vector{{2.0}}, Vector{{1.5}}, 1.0, 2.0);
  EXPECT_NEAR(w2[0], -0.5, 1e-15);
}

TEST(AoftrlStep, PerfectHintsMatchIncrementalRecursion) {
  const double beta = 0.05;
  auto s = unconstrained(3, beta);
  Rng rng(8);
  std::vector<Vector> g{Vector::Zero(3)};
  for (int t = 1; t <= 51; ++t) g.push_back(rng.normal_vector(3));
  // Recursion: w_{t+1} = w_t - beta (alpha_t g_t + alpha_{t+1} g~_{t+1} - alpha_t g~_t).
  Vector w_rec = Vector::Zero(3);
  Vector prev_hint_term = Vector::Zero(3);
  double worst = 0.0;
  for (int t = 1; t <= 50; ++t) {
    const double at = t, an = t + 1;
    const Vector w_argmin = aoftrl_step(s, g[t], g[t + 1], at, an);
    const Vector hint_term = an * g[t + 1];
    w_rec = w_rec - beta * (at * g[t] + hint_term - prev_hint_term);
    prev_hint_term = hint_term;
    worst = std::max(worst, (w_argmin - w_rec).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(AoftrlStep, RejectsNonPositiveWeights) {
  auto s = unconstrained(1, 0.1);
  EXPECT_THROW(aoftrl_step(s, Vector{{1.0}}, Vector{{1.0}}, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(ftrl_step(s, Vector{{1.0}}, -1.0), std::invalid_argument);
}

TEST(Projection, BallIsRadial) {
  const auto ball = ConstraintSet::ball(Vector::Zero(2), 1.0);
  const Vector p = project(ball, Vector{{3.0, 4.0}});
  EXPECT_NEAR(p[0], 0.6, 1e-15);
  EXPECT_NEAR(p[1], 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(ball.squared_diameter(), 4.0);
}

TEST(Projection, NonnegativeBoxClampsNegatives) {
  EXPECT_EQ(project(ConstraintSet::nonnegative(2), Vector{{-1.0, 2.0}}), (Vector{{0.0, 2.0}}));
}

TEST(Projection, InteriorPointsAreFixed) {
  const Vector inside{{0.1, -0.2}};
  for (const auto& set : {ConstraintSet::ball(Vector::Zero(2), 1.0),
                          ConstraintSet::box(Vector::Constant(2, -1.0), Vector::Ones(2)),
                          ConstraintSet::unconstrained(2)}) {
    EXPECT_EQ(project(set, inside), inside);
    EXPECT_TRUE(set.contains(inside));
  }
  EXPECT_FALSE(ConstraintSet::unconstrained(2).bounded());
}

TEST(RegretLedger, ZeroWhenPlayingComparator) {
  const Vector w_star{{1.0, -1.0}};
  RegretLedger ledger(w_star);
  Rng rng(2);
  for (int t = 1; t <= 5; ++t) ledger.update(t, rng.normal_vector(2), w_star);
  EXPECT_EQ(ledger.total, 0.0);
}

TEST(RegretLedger, SingleStepInnerProduct) {
  RegretLedger ledger(Vector::Zero(2));
  EXPECT_DOUBLE_EQ(regret_ledger_update(ledger, 1.0, Vector{{1.0, 0.0}}, Vector{{2.0, 0.0}}), 2.0);
}

TEST(RegretLedger, TracksHintCorrelation) {
  RegretLedger ledger(Vector::Zero(1));
  ledger.update(1.0, Vector{{2.0}}, Vector{{0.0}}, Vector{{1.0}});
  ledger.update(1.0, Vector{{1.0}}, Vector{{0.0}}, Vector{{2.0}});
  EXPECT_DOUBLE_EQ(ledger.min_correlation, 0.5);
  EXPECT_TRUE(ledger.correlation_satisfied(0.5));
  EXPECT_FALSE(ledger.correlation_satisfied(0.6));
}

TEST(RegretLedger, FtrlRunRespectsRegretBound) {
  // Online linear losses g_t = grad f(w_t) from a quadratic, alpha_t = 1.
  const auto f = gen_quadratic(3, 5);
  const double beta = 0.02;
  auto s = unconstrained(3, beta);
  Rng rng(6);
  const Vector w_star = rng.normal_vector(3);
  RegretLedger ledger(w_star);
  Vector w = s.initial_prediction();
  double stability = 0.0;
  for (int t = 1; t <= 20; ++t) {
    const Vector g = f.gradient(w + Vector::Ones(3));
    ledger.update(1.0, g, w);
    stability += 0.5 * beta * g.squaredNorm();
    w = ftrl_step(s, g, 1.0);
  }
  const double bound = w_star.squaredNorm() / beta + stability;
  EXPECT_LE(ledger.total, bound + 1e-9);
}

TEST(BetaSchedule, AcceleratedValues) {
  const auto b = BetaSchedule::accelerated(2.0, 8.0);
  EXPECT_EQ(b(1), 0.0);
  EXPECT_DOUBLE_EQ(b(2), 1.0 / 64.0);
  EXPECT_DOUBLE_EQ(b(5), 4.0 / 160.0);
  EXPECT_THROW(b(0), std::out_of_range);
}

TEST(BetaSchedule, ConstantRejectsNonPositive) {
  EXPECT_THROW(BetaSchedule::constant(0.0), std::invalid_argument);
  EXPECT_THROW(BetaSchedule::constant(kInf), std::invalid_argument);
  EXPECT_DOUBLE_EQ(BetaSchedule::constant(0.3)(100), 0.3);
}

}  // namespace
}  // namespace metaopt

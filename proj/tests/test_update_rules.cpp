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


#include "metaopt/update_rules.hpp"

#include <gtest/gtest.h>

#include <array>

namespace metaopt {
namespace {

QuadraticProblem diag14() {
  return QuadraticProblem(Vector{{1.0, 4.0}}, Matrix::Identity(2, 2));
}

// x = (4, 4) gives grad f(x) = (8, 32) on diag(1, 4).
const Vector kX{{4.0, 4.0}};

TEST(Apply, DirectReturnsW) {
  const auto p = diag14();
  const Vector w{{3.0, -1.0}};
  EXPECT_EQ(apply(UpdateRule::direct(2), p, kX, w), w);
  EXPECT_EQ(apply(UpdateRule::direct(2), p, Vector{{-7.0, 2.0}}, w), w);
}

TEST(Apply, ElementwiseLrIsHadamardProduct) {
  const Vector out = apply(UpdateRule::elementwise_lr(2), diag14(), kX, Vector{{0.1, 0.01}});
  EXPECT_NEAR(out[0], 0.8, 1e-15);
  EXPECT_NEAR(out[1], 0.32, 1e-15);
}

TEST(Apply, AdaGradStyleDividesBySqrtW) {
  const Vector out = apply(UpdateRule::adagrad_style(2), diag14(), kX, Vector{{4.0, 16.0}});
  EXPECT_DOUBLE_EQ(out[0], 4.0);
  EXPECT_DOUBLE_EQ(out[1], 8.0);
}

TEST(Apply, AdaGradStyleFloorsSmallW) {
  const Vector out = apply(UpdateRule::adagrad_style(2, 0.25), diag14(), kX, Vector{{0.0, -3.0}});
  EXPECT_DOUBLE_EQ(out[0], 16.0);
  EXPECT_DOUBLE_EQ(out[1], 64.0);
}

TEST(Apply, PlainGradientIgnoresW) {
  const auto rule = UpdateRule::plain_gradient(2, 0.1);
  const Vector a = apply(rule, diag14(), kX, Vector{{1.0, 2.0}});
  const Vector b = apply(rule, diag14(), kX, Vector{{-5.0, 9.0}});
  EXPECT_EQ(a, b);
  EXPECT_NEAR(a[0], -0.8, 1e-15);
  EXPECT_NEAR(a[1], -3.2, 1e-15);
}

TEST(Apply, RejectsMismatchedDimensions) {
  EXPECT_THROW(apply(UpdateRule::direct(3), diag14(), kX, Vector::Zero(3)), DimensionError);
  EXPECT_THROW(apply(UpdateRule::direct(2), diag14(), kX, Vector::Zero(3)), DimensionError);
}

TEST(Jtvp, DirectIsIdentity) {
  const Vector v{{1.0, 2.0}};
  EXPECT_EQ(jtvp(UpdateRule::direct(2), diag14(), kX, Vector::Zero(2), v), v);
}

TEST(Jtvp, ElementwiseLrScalesByGradient) {
  const Vector out =
      jtvp(UpdateRule::elementwise_lr(2), diag14(), kX, Vector{{0.3, 0.7}}, Vector::Ones(2));
  EXPECT_DOUBLE_EQ(out[0], 8.0);
  EXPECT_DOUBLE_EQ(out[1], 32.0);
}

TEST(Jtvp, PlainGradientIsZero) {
  EXPECT_TRUE(jtvp(UpdateRule::plain_gradient(2, 0.1), diag14(), kX, Vector::Ones(2),
                   Vector::Ones(2))
                  .isZero(0.0));
}

// Oracle: central differences of w -> <v, phi(x, w)>.
Vector fd_jtvp(const UpdateRule& rule, const Objective& f, const Vector& x, const Vector& w,
               const Vector& v, double h) {
  Vector out(w.size());
  for (Index i = 0; i < w.size(); ++i) {
    Vector up = w, down = w;
    up[i] += h;
    down[i] -= h;
    out[i] = (v.dot(apply(rule, f, x, up)) - v.dot(apply(rule, f, x, down))) / (2.0 * h);
  }
  return out;
}

TEST(Jtvp, MatchesFiniteDifferencesForEveryRule) {
  const auto p = gen_quadratic(4, 2);
  Rng rng(17);
  const std::array rules{UpdateRule::direct(4), UpdateRule::elementwise_lr(4),
                         UpdateRule::adagrad_style(4), UpdateRule::plain_gradient(4, 0.1)};
  for (const auto& rule : rules) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vector x = rng.uniform_vector(4, -2.0, 2.0);
      const Vector w = rng.uniform_vector(4, 0.5, 2.0);
      const Vector v = rng.normal_vector(4);
      const Vector exact = jtvp(rule, p, x, w, v);
      const Vector fd = fd_jtvp(rule, p, x, w, v, 1e-5);
      EXPECT_LT((exact - fd).cwiseAbs().maxCoeff(), 1e-6) << to_string(rule.kind);
    }
  }
}

TEST(Jtvp, AdaGradStyleIsZeroBelowFloor) {
  const auto rule = UpdateRule::adagrad_style(2, 0.5);
  const Vector out = jtvp(rule, diag14(), kX, Vector{{0.1, 4.0}}, Vector::Ones(2));
  EXPECT_EQ(out[0], 0.0);
  EXPECT_DOUBLE_EQ(out[1], -0.5 * 32.0 / 8.0);
}

TEST(Affinity, FlagsMatchBehaviour) {
  const auto p = diag14();
  const Vector a{{1.0, 4.0}}, b{{9.0, 0.25}};
  const Vector mid = 0.5 * (a + b);
  for (const auto& rule : {UpdateRule::direct(2), UpdateRule::elementwise_lr(2),
                           UpdateRule::plain_gradient(2, 0.1)}) {
    EXPECT_TRUE(rule.affine_in_w());
    const Vector lhs = apply(rule, p, kX, mid);
    const Vector rhs = 0.5 * (apply(rule, p, kX, a) + apply(rule, p, kX, b));
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
  const auto ada = UpdateRule::adagrad_style(2);
  EXPECT_FALSE(ada.affine_in_w());
  const Vector lhs = apply(ada, p, kX, mid);
  const Vector rhs = 0.5 * (apply(ada, p, kX, a) + apply(ada, p, kX, b));
  EXPECT_GT((lhs - rhs).cwiseAbs().maxCoeff(), 1.0);
}

TEST(EstimateLambda, DirectIsExactlyOne) {
  const auto p = gen_quadratic(3, 4);
  EXPECT_EQ(estimate_lambda(UpdateRule::direct(3), p, 100, ConstraintSet::unconstrained(3), 1), 1.0);
}

TEST(EstimateLambda, PlainGradientIsZero) {
  EXPECT_EQ(estimate_lambda(UpdateRule::plain_gradient(2, 0.1), diag14(), 100,
                            ConstraintSet::unconstrained(2), 1),
            0.0);
}

TEST(EstimateLambda, ElementwiseLrAgreesWithGridSearch) {
  const auto p = diag14();
  const auto rule = UpdateRule::elementwise_lr(2);
  // Oracle: max ratio over a 101 x 101 grid of [-10, 10]^2.
  double grid_max = 0.0;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const Vector x{{-10.0 + 0.2 * i, -10.0 + 0.2 * j}};
      const Vector g = p.gradient(x);
      if (g.squaredNorm() == 0.0) continue;
      grid_max = std::max(grid_max, g.cwiseProduct(g).squaredNorm() / g.squaredNorm());
    }
  }
  const double est =
      estimate_lambda(rule, p, 10000, ConstraintSet::box(Vector::Zero(2), Vector::Ones(2)), 3);
  EXPECT_TRUE(std::isfinite(est));
  EXPECT_GT(est, 0.0);
  EXPECT_LE(est, grid_max * (1.0 + 1e-12));
  EXPECT_GE(est, 0.9 * grid_max);
}

TEST(RuleKind, StringRoundTrip) {
  for (auto k : {RuleKind::Direct, RuleKind::ElementwiseLR, RuleKind::AdaGradStyle,
                 RuleKind::PlainGradient}) {
    EXPECT_EQ(rule_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(rule_kind_from_string("bogus"), std::invalid_argument);
}

}  // namespace
}  // namespace metaopt

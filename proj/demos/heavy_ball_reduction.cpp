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

// Averaged FTRL with the identity update rule and linear weights is the
// heavy-ball method. Prints the momentum and step recovered at each step.

#include "metaopt/metaopt.hpp"

#include <cstdio>

int main() {
  using namespace metaopt;
  const QuadraticProblem problem = gen_quadratic(2, 7);
  const double L = problem.lipschitz();
  const double beta = 1.0 / (2.0 * L);
  const ReductionCertificate cert = certify_heavy_ball_reduction(problem, beta, 12);

  std::printf("f(x) = x^T Q x, eigenvalues (%g, %g), L = %g, beta = 1/(2L)\n",
              problem.eigenvalues()[0], problem.eigenvalues()[1], L);
  std::printf("%3s %12s %12s %14s %14s %10s\n", "t", "momentum", "(t-2)/(t+1)", "fitted step",
              "2b(t-1)/(t+1)", "residual");
  for (std::size_t i = 0; i < cert.residuals.size(); ++i) {
    const int t = static_cast<int>(i) + 2;
    std::printf("%3d %12.8f %12.8f %14.8e %14.8e %10.2e\n", t, cert.fitted_momentum[i],
                heavy_ball_momentum_closed_form(t), cert.fitted_step[i],
                heavy_ball_step_closed_form(t, beta), cert.residuals[i]);
  }
  std::printf("certificate: %s\n", cert.pass ? "pass" : "fail");
  return cert.pass ? 0 : 1;
}

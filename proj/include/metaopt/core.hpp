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

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace metaopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Iterates or meta-parameters whose norm exceeds this are treated as diverged.
inline constexpr double kDivergenceThreshold = 1e12;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a run leaves the numerically meaningful region.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int step, const std::string& what)
      : std::runtime_error("diverged at step " + std::to_string(step) + ": " + what),
        step_(step) {}

  int step() const noexcept { return step_; }

 private:
  int step_;
};

inline void require_dim(const Vector& v, Index expected, const char* name) {
  if (v.size() != expected) {
    throw DimensionError(std::string(name) + ": expected length " + std::to_string(expected) +
                         ", got " + std::to_string(v.size()));
  }
}

inline void require_finite(const Vector& v, const char* name) {
  if (!v.allFinite()) throw NonFiniteError(std::string(name) + " has non-finite entries");
}

inline void guard_divergence(const Vector& v, int step, const char* name,
                             double threshold = kDivergenceThreshold) {
  if (!v.allFinite()) throw DivergenceError(step, std::string(name) + " is non-finite");
  const double norm = v.norm();
  if (norm > threshold) {
    throw DivergenceError(step, std::string(name) + " norm " + std::to_string(norm) +
                                    " exceeds " + std::to_string(threshold));
  }
}

}  // namespace metaopt

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

#include "metaopt/core.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

namespace metaopt {

/// Seeded generator with a platform-independent output stream.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the C++ standard.
/// Uniform doubles take the top 53 bits; Gaussians use the Marsaglia polar
/// method. Standard-library distributions are avoided because their outputs
/// are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (spare_) {
      const double s = *spare_;
      spare_.reset();
      return s;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    return u * scale;
  }

  Vector normal_vector(Index n) {
    Vector out(n);
    for (Index i = 0; i < n; ++i) out[i] = normal();
    return out;
  }

  Vector uniform_vector(Index n, double lo, double hi) {
    Vector out(n);
    for (Index i = 0; i < n; ++i) out[i] = uniform(lo, hi);
    return out;
  }

  /// Uniform sample from the Euclidean ball of the given radius.
  Vector uniform_in_ball(const Vector& center, double radius) {
    const Index n = center.size();
    Vector dir = normal_vector(n);
    const double norm = dir.norm();
    if (norm == 0.0) return center;
    const double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(n));
    return center + (r / norm) * dir;
  }

  /// Row-major fill of an n-by-m standard Gaussian matrix.
  Matrix normal_matrix(Index rows, Index cols) {
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) out(i, j) = normal();
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace metaopt

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
#include "metaopt/rng.hpp"

#include <cmath>
#include <string>

namespace metaopt {

enum class ConstraintKind { Unconstrained, Ball, Box };

/// Closed convex feasible set for the meta-parameters.
///
/// `squared_diameter()` is the diameter convention used by every bound in the
/// library: the largest squared distance between two feasible points, so that
/// ||u - v||^2 <= squared_diameter() for all feasible u, v.
class ConstraintSet {
 public:
  static ConstraintSet unconstrained(Index dim) {
    ConstraintSet s;
    s.kind_ = ConstraintKind::Unconstrained;
    s.center_ = Vector::Zero(dim);
    return s;
  }

  static ConstraintSet ball(Vector center, double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
      throw std::invalid_argument("ball radius must be positive and finite");
    }
    require_finite(center, "ball center");
    ConstraintSet s;
    s.kind_ = ConstraintKind::Ball;
    s.center_ = std::move(center);
    s.radius_ = radius;
    return s;
  }

  /// Per-coordinate interval [lower_i, upper_i]; infinite bounds allowed.
  static ConstraintSet box(Vector lower, Vector upper) {
    require_dim(upper, lower.size(), "box upper");
    if ((lower.array() > upper.array()).any()) throw std::invalid_argument("box is empty");
    if (lower.array().isNaN().any() || upper.array().isNaN().any()) {
      throw std::invalid_argument("box bounds must not be NaN");
    }
    ConstraintSet s;
    s.kind_ = ConstraintKind::Box;
    s.center_ = Vector::Zero(lower.size());
    s.lower_ = std::move(lower);
    s.upper_ = std::move(upper);
    return s;
  }

  /// The orthant [0, inf)^m.
  static ConstraintSet nonnegative(Index dim) {
    return box(Vector::Zero(dim), Vector::Constant(dim, kInf));
  }

  ConstraintKind kind() const noexcept { return kind_; }
  Index dim() const noexcept { return center_.size(); }
  const Vector& center() const noexcept { return center_; }
  double radius() const noexcept { return radius_; }
  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }

  Vector project(const Vector& w) const {
    require_dim(w, dim(), "projected vector");
    switch (kind_) {
      case ConstraintKind::Unconstrained:
        return w;
      case ConstraintKind::Ball: {
        const Vector offset = w - center_;
        const double norm = offset.norm();
        if (norm <= radius_) return w;
        return center_ + (radius_ / norm) * offset;
      }
      case ConstraintKind::Box:
        return w.cwiseMax(lower_).cwiseMin(upper_);
    }
    return w;
  }

  bool contains(const Vector& w, double tol = 1e-12) const {
    require_dim(w, dim(), "tested vector");
    switch (kind_) {
      case ConstraintKind::Unconstrained:
        return true;
      case ConstraintKind::Ball:
        return (w - center_).norm() <= radius_ * (1.0 + tol) + tol;
      case ConstraintKind::Box:
        return ((w.array() >= lower_.array() - tol) && (w.array() <= upper_.array() + tol)).all();
    }
    return false;
  }

  /// +inf for unbounded sets.
  double squared_diameter() const {
    switch (kind_) {
      case ConstraintKind::Unconstrained:
        return kInf;
      case ConstraintKind::Ball:
        return 4.0 * radius_ * radius_;
      case ConstraintKind::Box:
        return (upper_ - lower_).squaredNorm();
    }
    return kInf;
  }

  bool bounded() const { return std::isfinite(squared_diameter()); }

  /// Uniform sample; unbounded directions are truncated to +/- `unbounded_extent`.
  Vector sample(Rng& rng, double unbounded_extent = 10.0) const {
    switch (kind_) {
      case ConstraintKind::Unconstrained:
        return rng.uniform_vector(dim(), -unbounded_extent, unbounded_extent);
      case ConstraintKind::Ball:
        return rng.uniform_in_ball(center_, radius_);
      case ConstraintKind::Box: {
        Vector out(dim());
        for (Index i = 0; i < dim(); ++i) {
          double lo = lower_[i], hi = upper_[i];
          if (!std::isfinite(lo) && !std::isfinite(hi)) {
            lo = -unbounded_extent;
            hi = unbounded_extent;
          } else if (!std::isfinite(lo)) {
            lo = hi - 2.0 * unbounded_extent;
          } else if (!std::isfinite(hi)) {
            hi = lo + 2.0 * unbounded_extent;
          }
          out[i] = rng.uniform(lo, hi);
        }
        return out;
      }
    }
    return center_;
  }

  std::string describe() const {
    switch (kind_) {
      case ConstraintKind::Unconstrained:
        return "unconstrained";
      case ConstraintKind::Ball:
        return "ball(r=" + std::to_string(radius_) + ")";
      case ConstraintKind::Box:
        return "box";
    }
    return "?";
  }

 private:
  ConstraintSet() = default;

  ConstraintKind kind_ = ConstraintKind::Unconstrained;
  Vector center_;
  double radius_ = 0.0;
  Vector lower_;
  Vector upper_;
};

inline Vector project(const ConstraintSet& constraint, const Vector& w) {
  return constraint.project(w);
}

}  // namespace metaopt

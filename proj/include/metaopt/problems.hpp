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

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace metaopt {

/// Smooth convex objective seen by the drivers: value and gradient oracles plus
/// whatever is known about its minimizer and smoothness.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;

  virtual std::optional<Vector> minimizer() const { return std::nullopt; }
  virtual std::optional<double> min_value() const { return std::nullopt; }
  /// Lipschitz constant of the gradient, when known.
  virtual std::optional<double> smoothness() const { return std::nullopt; }

 protected:
  void check_point(const Vector& x) const {
    require_dim(x, dim(), "point");
    require_finite(x, "point");
  }
};

/// f(x) = <x, Qx> with Q symmetric positive definite.
class QuadraticProblem final : public Objective {
 public:
  /// Builds Q = R^T diag(spectrum) R for an orthogonal `rotation`.
  QuadraticProblem(Vector spectrum, const Matrix& rotation, std::uint64_t seed = 0)
      : eigenvalues_(std::move(spectrum)), seed_(seed) {
    const Index n = eigenvalues_.size();
    if (n == 0) throw std::invalid_argument("quadratic problem needs dim >= 1");
    if (rotation.rows() != n || rotation.cols() != n) {
      throw DimensionError("rotation must be square with the spectrum's size");
    }
    if ((eigenvalues_.array() <= 0.0).any()) {
      throw std::invalid_argument("eigenvalues must be strictly positive");
    }
    Matrix q = rotation.transpose() * eigenvalues_.asDiagonal() * rotation;
    q_ = 0.5 * (q + q.transpose());
    smoothness_ = 2.0 * eigenvalues_.maxCoeff();
    factor_ = q_.ldlt();
  }

  /// Adopts an explicit symmetric matrix; the spectrum is recomputed.
  /// A recorded spectrum is kept verbatim when it agrees with Q to 1e-8.
  static QuadraticProblem from_matrix(const Matrix& q, std::uint64_t seed = 0,
                                      const std::optional<Vector>& spectrum = std::nullopt) {
    if (q.rows() != q.cols() || q.rows() == 0) throw DimensionError("Q must be square, non-empty");
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("Q is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(q);
    Vector computed = eig.eigenvalues();
    if (spectrum) {
      require_dim(*spectrum, q.rows(), "eigenvalues");
      if ((*spectrum - computed).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw std::invalid_argument("recorded eigenvalues disagree with Q");
      }
      computed = *spectrum;
    }
    return QuadraticProblem(q, std::move(computed), seed);
  }

  Index dim() const override { return q_.rows(); }

  double value(const Vector& x) const override {
    check_point(x);
    return x.dot(q_ * x);
  }

  Vector gradient(const Vector& x) const override {
    check_point(x);
    return 2.0 * (q_ * x);
  }

  std::optional<Vector> minimizer() const override { return Vector::Zero(dim()); }
  std::optional<double> min_value() const override { return 0.0; }
  std::optional<double> smoothness() const override { return smoothness_; }

  const Matrix& q_matrix() const noexcept { return q_; }
  /// Spectrum sorted ascending, written sigma_i in the docs.
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double lipschitz() const noexcept { return smoothness_; }

  /// Solves Q x = b.
  Vector solve(const Vector& b) const { return factor_.solve(b); }

 private:
  QuadraticProblem(Matrix q, Vector spectrum, std::uint64_t seed)
      : q_(std::move(q)), eigenvalues_(std::move(spectrum)), seed_(seed) {
    if ((eigenvalues_.array() <= 0.0).any()) {
      throw std::invalid_argument("Q must be positive definite");
    }
    smoothness_ = 2.0 * eigenvalues_.maxCoeff();
    factor_ = q_.ldlt();
  }

  Matrix q_;
  Vector eigenvalues_;
  std::uint64_t seed_ = 0;
  double smoothness_ = 0.0;
  Eigen::LDLT<Matrix> factor_;
};

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of R's diagonal folded into Q.
inline Matrix haar_orthogonal(Index n, Rng& rng) {
  const Matrix gaussian = rng.normal_matrix(n, n);
  Eigen::HouseholderQR<Matrix> qr(gaussian);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

/// Spectrum {1^2, 2^2, ..., n^2}.
inline Vector squared_index_spectrum(Index n) {
  Vector s(n);
  for (Index i = 0; i < n; ++i) s[i] = static_cast<double>((i + 1) * (i + 1));
  return s;
}

/// Ill-conditioned quadratic with spectrum {1, 4, ..., n^2} and a Haar rotation.
inline QuadraticProblem gen_quadratic(Index dim, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("gen_quadratic: dim must be >= 1");
  Rng rng(seed);
  const Matrix u = haar_orthogonal(dim, rng);
  return QuadraticProblem(squared_index_spectrum(dim), u, seed);
}

inline double eval(const QuadraticProblem& problem, const Vector& x) { return problem.value(x); }
inline Vector grad(const QuadraticProblem& problem, const Vector& x) {
  return problem.gradient(x);
}

/// c * f(x) for a wrapped objective.
class ScaledObjective final : public Objective {
 public:
  ScaledObjective(std::shared_ptr<const Objective> base, double scale)
      : base_(std::move(base)), scale_(scale) {
    if (!base_) throw std::invalid_argument("ScaledObjective: null base");
    if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
      throw std::invalid_argument("ScaledObjective: scale must be positive and finite");
    }
  }

  Index dim() const override { return base_->dim(); }
  double value(const Vector& x) const override { return scale_ * base_->value(x); }
  Vector gradient(const Vector& x) const override { return scale_ * base_->gradient(x); }
  std::optional<Vector> minimizer() const override { return base_->minimizer(); }
  std::optional<double> min_value() const override {
    if (auto v = base_->min_value()) return scale_ * *v;
    return std::nullopt;
  }
  std::optional<double> smoothness() const override {
    if (auto l = base_->smoothness()) return scale_ * *l;
    return std::nullopt;
  }

  double scale() const noexcept { return scale_; }

 private:
  std::shared_ptr<const Objective> base_;
  double scale_;
};

/// L2-regularised logistic regression on seeded synthetic data.
///
/// Labels come from a planted linear classifier with 10% label noise. The
/// minimizer is computed once by Newton's method so that gaps are available.
class LogisticRegression final : public Objective {
 public:
  LogisticRegression(Index dim, Index samples, double l2, std::uint64_t seed)
      : l2_(l2), seed_(seed) {
    if (dim < 1 || samples < 1) throw std::invalid_argument("logistic: dim, samples >= 1");
    if (!(l2 > 0.0)) throw std::invalid_argument("logistic: l2 must be positive");
    Rng rng(seed);
    features_ = rng.normal_matrix(samples, dim);
    const Vector planted = rng.normal_vector(dim);
    labels_.resize(samples);
    for (Index i = 0; i < samples; ++i) {
      const double margin = features_.row(i).dot(planted);
      double label = margin >= 0.0 ? 1.0 : -1.0;
      if (rng.uniform() < 0.1) label = -label;
      labels_[i] = label;
    }
    const double top = Eigen::JacobiSVD<Matrix>(features_).singularValues()[0];
    smoothness_ = top * top / (4.0 * static_cast<double>(samples)) + l2_;
    minimizer_ = newton_minimizer();
    min_value_ = value(minimizer_);
  }

  Index dim() const override { return features_.cols(); }

  double value(const Vector& x) const override {
    check_point(x);
    const Vector margins = labels_.cwiseProduct(features_ * x);
    double loss = 0.0;
    for (Index i = 0; i < margins.size(); ++i) loss += softplus(-margins[i]);
    return loss / static_cast<double>(margins.size()) + 0.5 * l2_ * x.squaredNorm();
  }

  Vector gradient(const Vector& x) const override {
    check_point(x);
    return raw_gradient(x);
  }

  std::optional<Vector> minimizer() const override { return minimizer_; }
  std::optional<double> min_value() const override { return min_value_; }
  std::optional<double> smoothness() const override { return smoothness_; }

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  static double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  static double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }

  Vector raw_gradient(const Vector& x) const {
    const Vector margins = labels_.cwiseProduct(features_ * x);
    Vector coeff(margins.size());
    for (Index i = 0; i < margins.size(); ++i) coeff[i] = -labels_[i] * sigmoid(-margins[i]);
    return features_.transpose() * coeff / static_cast<double>(margins.size()) + l2_ * x;
  }

  Vector newton_minimizer() const {
    const Index n = features_.cols();
    const auto m = static_cast<double>(features_.rows());
    Vector x = Vector::Zero(n);
    for (int iter = 0; iter < 100; ++iter) {
      const Vector g = raw_gradient(x);
      if (g.norm() < 1e-15) break;
      const Vector margins = labels_.cwiseProduct(features_ * x);
      Vector curvature(margins.size());
      for (Index i = 0; i < margins.size(); ++i) {
        const double s = sigmoid(margins[i]);
        curvature[i] = s * (1.0 - s);
      }
      Matrix hessian = features_.transpose() * curvature.asDiagonal() * features_ / m;
      hessian.diagonal().array() += l2_;
      const Vector step = hessian.ldlt().solve(g);
      x -= step;
      if (step.norm() < 1e-16 * std::max(1.0, x.norm())) break;
    }
    return x;
  }

  Matrix features_;
  Vector labels_;
  double l2_;
  std::uint64_t seed_;
  double smoothness_ = 0.0;
  Vector minimizer_;
  double min_value_ = 0.0;
};

/// Sub-optimality f(x) - f*, or NaN when f* is unknown.
inline double suboptimality(const Objective& objective, const Vector& x) {
  if (auto fstar = objective.min_value()) return objective.value(x) - *fstar;
  return kNaN;
}

// ---- serialisation -------------------------------------------------------

inline nlohmann::json problem_to_json(const QuadraticProblem& problem) {
  const Index n = problem.dim();
  std::vector<double> eig(problem.eigenvalues().data(), problem.eigenvalues().data() + n);
  std::vector<double> q;
  q.reserve(static_cast<std::size_t>(n * n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) q.push_back(problem.q_matrix()(i, j));
  }
  return nlohmann::json{{"dim", n}, {"seed", problem.seed()}, {"eigenvalues", eig}, {"q_matrix", q}};
}

inline QuadraticProblem problem_from_json(const nlohmann::json& doc) {
  const auto n = doc.at("dim").get<Index>();
  const auto q = doc.at("q_matrix").get<std::vector<double>>();
  if (n < 1 || static_cast<Index>(q.size()) != n * n) {
    throw DimensionError("problem JSON: q_matrix must hold dim*dim entries");
  }
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = q[static_cast<std::size_t>(i * n + j)];
  }
  std::optional<Vector> spectrum;
  if (doc.contains("eigenvalues")) {
    const auto e = doc.at("eigenvalues").get<std::vector<double>>();
    spectrum = Eigen::Map<const Vector>(e.data(), static_cast<Index>(e.size()));
  }
  return QuadraticProblem::from_matrix(m, doc.value("seed", std::uint64_t{0}), spectrum);
}

}  // namespace metaopt

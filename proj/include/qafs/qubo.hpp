// Copyright 2026 The qafs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qafs/dataset.hpp"
#include "qafs/error.hpp"
#include "qafs/metrics.hpp"
#include "qafs/parallel.hpp"

namespace qafs {

/// Upper-triangular mRMR matrix: negated relevancies on the diagonal,
/// redundancies above it, zeros below.
class QuboMatrix {
 public:
  QuboMatrix() = default;
  explicit QuboMatrix(Eigen::MatrixXd upper) : m_(std::move(upper)) {
    if (m_.rows() != m_.cols()) throw InvalidArgument("QuboMatrix: matrix must be square");
    if (m_.rows() < 1) throw InvalidArgument("QuboMatrix: empty matrix");
    if (!m_.allFinite()) throw InvalidArgument("QuboMatrix: non-finite entry");
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
      if (m_(i, i) > 0.0) throw InvalidArgument("QuboMatrix: diagonal entries must be <= 0");
      for (Eigen::Index j = 0; j < m_.cols(); ++j) {
        if (j < i && m_(i, j) != 0.0)
          throw InvalidArgument("QuboMatrix: lower triangle must be zero");
        if (j > i && m_(i, j) < 0.0)
          throw InvalidArgument("QuboMatrix: off-diagonal entries must be >= 0");
      }
    }
  }

  std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& matrix() const { return m_; }

  friend bool operator==(const QuboMatrix& a, const QuboMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Eigen::MatrixXd m_;
};

/// Scaled and penalized selection problem:
///   E(w) = alpha * sum_{i<=j} w_i Q_ij w_j + lambda * (sum_i w_i - k)^2
struct QuboProblem {
  QuboMatrix q;
  double alpha = 1000.0;
  double lambda = 10.0;
  std::size_t k = 1;

  QuboProblem(QuboMatrix matrix, double alpha_, double lambda_, std::size_t k_)
      : q(std::move(matrix)), alpha(alpha_), lambda(lambda_), k(k_) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("QuboProblem: alpha must be > 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("QuboProblem: lambda must be >= 0");
    if (k < 1 || k > q.size())
      throw InvalidArgument("QuboProblem: k=" + std::to_string(k) + " outside [1, " +
                            std::to_string(q.size()) + "]");
  }

  std::size_t size() const { return q.size(); }
};

/// Generic binary quadratic model in upper-triangular form with a constant
/// offset: E(w) = sum_{i<=j} w_i C_ij w_j + offset. This is the shape that
/// crosses the remote-sampler wire.
class QuadraticModel {
 public:
  QuadraticModel() = default;
  QuadraticModel(Eigen::MatrixXd upper, double offset) : c_(std::move(upper)), offset_(offset) {
    if (c_.rows() != c_.cols()) throw InvalidArgument("QuadraticModel: matrix must be square");
    if (c_.rows() < 1) throw InvalidArgument("QuadraticModel: empty model");
    if (!c_.allFinite() || !std::isfinite(offset_))
      throw InvalidArgument("QuadraticModel: non-finite coefficient");
    for (Eigen::Index i = 0; i < c_.rows(); ++i)
      for (Eigen::Index j = 0; j < i; ++j)
        if (c_(i, j) != 0.0) throw InvalidArgument("QuadraticModel: lower triangle must be zero");
  }

  std::size_t size() const { return static_cast<std::size_t>(c_.rows()); }
  const Eigen::MatrixXd& coefficients() const { return c_; }
  double offset() const { return offset_; }

  double energy(const FeatureMask& w) const {
    if (w.size() != size())
      throw InvalidArgument("QuadraticModel::energy: mask length " + std::to_string(w.size()) +
                            " != " + std::to_string(size()));
    double e = 0.0;
    const auto on = w.indices();
    for (std::size_t a = 0; a < on.size(); ++a)
      for (std::size_t b = a; b < on.size(); ++b)
        e += c_(static_cast<Eigen::Index>(on[a]), static_cast<Eigen::Index>(on[b]));
    return e + offset_;
  }

  /// Largest absolute coefficient (0 for an all-zero model).
  double max_abs_coefficient() const { return c_.cwiseAbs().maxCoeff(); }

 private:
  Eigen::MatrixXd c_;
  double offset_ = 0.0;
};

/// Q_ii = -|d(X_i, y)|, Q_ij = |d(X_i, X_j)| for i < j.
inline QuboMatrix build_q(const Dataset& data, const MetricKind& metric) {
  metric.validate();
  const std::size_t m = data.cols();
  const std::size_t n_pairs = m * (m + 1) / 2;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n_pairs);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) pairs.emplace_back(i, j);

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  parallel_for(pairs.size(), [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    const auto other = i == j ? data.target_span() : data.column(j);
    double d = 0.0;
    try {
      d = std::abs(distance(metric, data.column(i), other));
    } catch (const std::exception& e) {
      const std::string where = i == j ? "(" + data.feature_names()[i] + ", target)"
                                       : "(" + data.feature_names()[i] + ", " + data.feature_names()[j] + ")";
      throw InvalidArgument("build_q: " + metric.label() + " on column pair " + where + ": " + e.what());
    }
    q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = i == j ? -d : d;
  });
  return QuboMatrix(std::move(q));
}

inline double raw_objective(const QuboMatrix& q, const FeatureMask& w, double alpha) {
  if (w.size() != q.size())
    throw InvalidArgument("raw_objective: mask length " + std::to_string(w.size()) +
                          " != " + std::to_string(q.size()));
  double e = 0.0;
  const auto on = w.indices();
  for (std::size_t a = 0; a < on.size(); ++a)
    for (std::size_t b = a; b < on.size(); ++b) e += q(on[a], on[b]);
  return alpha * e;
}

inline double energy(const QuboProblem& problem, const FeatureMask& w) {
  const double excess = static_cast<double>(w.k()) - static_cast<double>(problem.k);
  return raw_objective(problem.q, w, problem.alpha) + problem.lambda * excess * excess;
}

/// Folds the cardinality penalty into the quadratic form:
///   C_ii = alpha Q_ii + lambda (1 - 2k),  C_ij = alpha Q_ij + 2 lambda,
/// offset lambda k^2, so the model energy equals energy(problem, w) for
/// every w.
inline QuadraticModel expand_penalized(const QuboProblem& problem) {
  const auto m = static_cast<Eigen::Index>(problem.size());
  const double lam = problem.lambda;
  const double k = static_cast<double>(problem.k);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    c(i, i) = problem.alpha * problem.q.matrix()(i, i) + lam * (1.0 - 2.0 * k);
    for (Eigen::Index j = i + 1; j < m; ++j)
      c(i, j) = problem.alpha * problem.q.matrix()(i, j) + 2.0 * lam;
  }
  return QuadraticModel(std::move(c), lam * k * k);
}

}  // namespace qafs

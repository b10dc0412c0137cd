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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "qafs/dataset.hpp"
#include "qafs/models.hpp"

using Catch::Matchers::WithinAbs;
using namespace qafs;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd x(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) x(i, j) = z(g);
  return x;
}

// Normal equations [1 X]'[1 X] b = [1 X]'y solved by Gaussian elimination
// with partial pivoting, written out with plain vectors.
std::vector<double> normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const std::size_t n = static_cast<std::size_t>(x.rows()), p = static_cast<std::size_t>(x.cols()) + 1;
  auto a_at = [&](std::size_t r, std::size_t c) {
    return c == 0 ? 1.0 : x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1));
  };
  std::vector<std::vector<double>> m(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t r = 0; r < n; ++r) m[i][j] += a_at(r, i) * a_at(r, j);
    for (std::size_t r = 0; r < n; ++r) m[i][p] += a_at(r, i) * y(static_cast<Eigen::Index>(r));
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    std::swap(m[c], m[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (std::size_t j = c; j <= p; ++j) m[r][j] -= f * m[c][j];
    }
  }
  std::vector<double> b(p);
  for (std::size_t i = 0; i < p; ++i) b[i] = m[i][p] / m[i][i];
  return b;  // b[0] intercept, b[1..] weights
}

}  // namespace

TEST_CASE("linear fit of y = 2x") {
  Eigen::MatrixXd x(5, 1);
  x << 1, 2, 3, 4, 5;
  const auto m = fit_linear(x, 2.0 * x.col(0));
  CHECK_THAT(m.weights(0), WithinAbs(2.0, 1e-8));
  CHECK_THAT(m.intercept, WithinAbs(0.0, 1e-8));
}

TEST_CASE("linear fit of a constant target") {
  const auto x = random_matrix(20, 3, 1);
  const auto m = fit_linear(x, Eigen::VectorXd::Constant(20, 4.25));
  CHECK(m.weights.cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THAT(m.intercept, WithinAbs(4.25, 1e-10));
}

TEST_CASE("linear fit matches a normal-equations solver") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = random_matrix(50, 5, seed);
    Eigen::VectorXd y = random_matrix(50, 1, 100 + seed).col(0) + x * Eigen::VectorXd::LinSpaced(5, -2, 3);
    const auto m = fit_linear(x, y);
    const auto b = normal_equations(x, y);
    CHECK_THAT(m.intercept, WithinAbs(b[0], 1e-6));
    for (int j = 0; j < 5; ++j) CHECK_THAT(m.weights(j), WithinAbs(b[static_cast<std::size_t>(j) + 1], 1e-6));
    Eigen::VectorXd ref_pred = Eigen::VectorXd::Constant(50, b[0]);
    for (int j = 0; j < 5; ++j) ref_pred += b[static_cast<std::size_t>(j) + 1] * x.col(j);
    CHECK_THAT((y - predict_linear(m, x)).norm(), WithinAbs((y - ref_pred).norm(), 1e-6));
  }
}

TEST_CASE("noiseless linear data recovers the generating weights") {
  const auto x = random_matrix(30, 6, 7);
  Eigen::VectorXd w(6);
  w << 1.5, -2.0, 0.0, 3.25, 0.5, -0.75;
  const auto m = fit_linear(x, x * w + Eigen::VectorXd::Constant(30, -1.0));
  CHECK((m.weights - w).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THAT(m.intercept, WithinAbs(-1.0, 1e-6));
}

TEST_CASE("rank-deficient linear systems still fit") {
  auto x = random_matrix(20, 3, 3);
  x.col(2) = x.col(0);                              // duplicate
  Eigen::MatrixXd with_const(20, 4);
  with_const << x, Eigen::VectorXd::Constant(20, 5.0);  // constant column
  const Eigen::VectorXd y = 3.0 * x.col(0) - x.col(1);
  const auto m = fit_linear(with_const, y);
  CHECK(m.weights.allFinite());
  CHECK((predict_linear(m, with_const) - y).cwiseAbs().maxCoeff() < 1e-5);
  CHECK_THAT(m.weights(0) + m.weights(2), WithinAbs(3.0, 1e-5));
}

TEST_CASE("linear fit and predict argument checks") {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, std::nan("");
  CHECK_THROWS_AS(fit_linear(x, Eigen::Vector3d(1, 2, 3)), InvalidArgument);
  x(2, 0) = 3;
  CHECK_THROWS_AS(fit_linear(x, Eigen::Vector2d(1, 2)), InvalidArgument);
  LinearModel m{Eigen::VectorXd::Constant(1, 2.0), 1.0};
  Eigen::MatrixXd three(1, 1);
  three << 3;
  CHECK(predict_linear(m, three)(0) == 7.0);
  CHECK(predict_linear(m, Eigen::MatrixXd::Zero(4, 1)) == Eigen::VectorXd::Constant(4, 1.0));
  CHECK_THROWS_AS(predict_linear(m, Eigen::MatrixXd::Zero(2, 2)), InvalidArgument);
  const auto fit = fit_linear(x, 2.0 * x.col(0));
  CHECK_THAT(predict_linear(fit, x.row(1))(0), WithinAbs(4.0, 1e-9));
}

TEST_CASE("boosting a constant target") {
  const auto x = random_matrix(30, 2, 4);
  const auto m = fit_gbr(x, Eigen::VectorXd::Constant(30, 3.0));
  CHECK(m.base_prediction == 3.0);
  for (const auto& t : m.trees)
    for (const auto& n : t.nodes) CHECK(n.value == 0.0);
}

TEST_CASE("a single stump splits a step at the midpoint") {
  Eigen::MatrixXd x(8, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5, 6, 5, 7, 5, 8, 5, 9, 5;
  Eigen::VectorXd y(8);
  y << 0, 0, 0, 0, 10, 10, 10, 10;
  GbrParams p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.learning_rate = 1.0;
  p.min_samples_leaf = 1;
  const auto m = fit_gbr(x, y, p);
  REQUIRE(m.trees.size() == 1);
  const auto& root = m.trees[0].nodes[0];
  CHECK(root.feature == 0);
  CHECK(root.threshold == 5.0);
  CHECK((predict_gbr(m, x) - y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("equal split gains prefer the lower feature index") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 0, 0, 1, 1, 1, 1;
  const Eigen::Vector4d y(0, 0, 1, 1);
  GbrParams p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.min_samples_leaf = 1;
  CHECK(fit_gbr(x, y, p).trees[0].nodes[0].feature == 0);
}

TEST_CASE("boosting training loss never increases") {
  const auto d = generate_friedman1(120, 10, 1.0, 5);
  const auto m = fit_gbr(d.features(), d.target());
  REQUIRE(m.train_loss.size() == 101);
  for (std::size_t t = 1; t < m.train_loss.size(); ++t) CHECK(m.train_loss[t] <= m.train_loss[t - 1] + 1e-9);
  double prev = INFINITY;
  for (int n : {10, 50, 100}) {
    GbrParams p;
    p.n_trees = n;
    const auto fit = fit_gbr(d.features(), d.target(), p);
    const double train_mae = mae(predict_gbr(fit, d.features()), d.target());
    CHECK(train_mae <= prev);
    prev = train_mae;
  }
}

TEST_CASE("boosted prediction is base plus the scaled tree sum") {
  const auto d = generate_friedman1(60, 6, 1.0, 6);
  const auto m = fit_gbr(d.features(), d.target());
  const auto pred = predict_gbr(m, d.features());
  for (Eigen::Index i = 0; i < 5; ++i) {
    double s = 0.0;
    for (const auto& t : m.trees) s += t.predict(d.features().row(i));
    CHECK(pred(i) == m.base_prediction + m.learning_rate * s);
  }
  // Stored training loss matches the final-stage predictions.
  CHECK_THAT((d.target() - pred).squaredNorm(), WithinAbs(m.train_loss.back(), 1e-8));
  GbrModel empty;
  empty.base_prediction = 2.5;
  empty.n_features = 6;
  CHECK(predict_gbr(empty, d.features()) == Eigen::VectorXd::Constant(60, 2.5));
  CHECK_THROWS_AS(predict_gbr(m, Eigen::MatrixXd::Zero(2, 3)), InvalidArgument);
}

TEST_CASE("boosted predictions stay within the widened training range") {
  const auto d = generate_friedman1(80, 5, 1.0, 7);
  const auto m = fit_gbr(d.features(), d.target());
  const double lo = d.target().minCoeff(), hi = d.target().maxCoeff(), range = hi - lo;
  const auto probe = generate_friedman1(500, 5, 0.0, 8).features() * 3.0 - Eigen::MatrixXd::Constant(500, 5, 1.0);
  const auto pred = predict_gbr(m, probe);
  CHECK(pred.minCoeff() >= lo - range);
  CHECK(pred.maxCoeff() <= hi + range);
}

TEST_CASE("boosting is deterministic and validates parameters") {
  const auto d = generate_friedman1(50, 5, 1.0, 9);
  const auto a = fit_gbr(d.features(), d.target());
  const auto b = fit_gbr(d.features(), d.target());
  CHECK(predict_gbr(a, d.features()) == predict_gbr(b, d.features()));
  GbrParams p;
  p.learning_rate = 0.0;
  CHECK_THROWS_AS(fit_gbr(d.features(), d.target(), p), InvalidArgument);
  p = {};
  p.min_samples_leaf = 30;
  CHECK_THROWS_AS(fit_gbr(d.features(), d.target(), p), InvalidArgument);
}

TEST_CASE("mean absolute error") {
  CHECK(mae(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2)) == 0.0);
  CHECK(mae(Eigen::Vector2d(1, 2), Eigen::Vector2d(2, 4)) == 1.5);
  const Eigen::Vector3d p(1, -2, 0.5), t(0.5, 1, 2);
  for (double c : {-3.0, 0.7, 10.0}) CHECK(mae(p.array() + c, t) <= mae(p, t) + std::abs(c) + 1e-12);
  CHECK(mae(p, t) > 0.0);
  CHECK_THROWS_AS(mae(Eigen::Vector2d(1, 2), t), InvalidArgument);
}

TEST_CASE("feature importance") {
  const LinearModel lm{Eigen::Vector2d(2, 0), 0.0};
  const auto imp = importance(lm, Eigen::Vector2d(1, 1));
  CHECK(imp(0) == 1.0);
  CHECK(imp(1) == 0.0);

  // Feature 1 is constant, so no tree can split on it.
  auto x = random_matrix(40, 3, 10);
  x.col(1).setConstant(2.0);
  const auto g = fit_gbr(x, x.col(0) + 0.5 * x.col(2));
  const auto gi = importance(g);
  CHECK(gi(1) == 0.0);
  CHECK_THAT(gi.sum(), WithinAbs(1.0, 1e-12));

  // y = 10 * x4 + noise: the fourth column dominates.
  auto z = random_matrix(100, 6, 11);
  const Eigen::VectorXd y = 10.0 * z.col(3) + 0.1 * random_matrix(100, 1, 12).col(0);
  const auto fit = fit_linear(z, y);
  const auto li = importance(fit, column_std(z));
  Eigen::Index best = 0;
  li.maxCoeff(&best);
  CHECK(best == 3);
}

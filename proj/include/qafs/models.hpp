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

// Downstream regressors: ordinary least squares and gradient-boosted
// regression trees (squared-error loss), plus MAE and feature importance.

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <type_traits>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "qafs/error.hpp"

namespace qafs {

namespace model_detail {

inline void check_finite(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const char* who) {
  if (!x.allFinite() || !y.allFinite()) throw InvalidArgument(std::string(who) + ": non-finite input");
}

inline void check_fit_shape(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const char* who) {
  if (x.rows() < 1 || x.cols() < 1)
    throw InvalidArgument(std::string(who) + ": need at least one row and one column");
  if (x.rows() != y.size())
    throw InvalidArgument(std::string(who) + ": " + std::to_string(x.rows()) + " rows but " +
                          std::to_string(y.size()) + " targets");
  check_finite(x, y, who);
}

}  // namespace model_detail

// ---------------------------------------------------------------------------
// Linear regression

struct LinearModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
};

/// Least squares on centered data. Full-rank systems are solved by
/// column-pivoted QR; rank-deficient ones get a ridge of 1e-8 times the mean
/// diagonal of the centered Gram matrix.
inline LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  model_detail::check_fit_shape(x, y, "fit_linear");
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  const auto k = x.cols();

  LinearModel model;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
  if (qr.rank() == k) {
    model.weights = qr.solve(yc);
  } else {
    const double ridge = 1e-8 * xc.colwise().squaredNorm().mean();
    if (ridge == 0.0) {
      model.weights = Eigen::VectorXd::Zero(k);  // every column constant
    } else {
      Eigen::MatrixXd a(xc.rows() + k, k);
      a << xc, std::sqrt(ridge) * Eigen::MatrixXd::Identity(k, k);
      Eigen::VectorXd b = Eigen::VectorXd::Zero(xc.rows() + k);
      b.head(xc.rows()) = yc;
      model.weights = a.colPivHouseholderQr().solve(b);
    }
  }
  model.intercept = y_mean - x_mean.dot(model.weights);
  return model;
}

inline Eigen::VectorXd predict_linear(const LinearModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.weights.size())
    throw InvalidArgument("predict_linear: " + std::to_string(x.cols()) + " columns, model has " +
                          std::to_string(model.weights.size()));
  return (x * model.weights).array() + model.intercept;
}

// ---------------------------------------------------------------------------
// Gradient-boosted regression trees

struct GbrParams {
  int n_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_samples_leaf = 2;
  std::uint64_t seed = 0;  // no subsampling, so fits do not consume it

  void validate() const {
    if (n_trees < 0) throw InvalidArgument("GbrParams: n_trees must be >= 0");
    if (max_depth < 1) throw InvalidArgument("GbrParams: max_depth must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
      throw InvalidArgument("GbrParams: learning_rate must be in (0, 1]");
    if (min_samples_leaf < 1) throw InvalidArgument("GbrParams: min_samples_leaf must be >= 1");
  }
};

/// Array-backed binary tree. Internal nodes send x[feature] <= threshold
/// to the left child.
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    double gain = 0.0;  // reduction in squared error at this split
  };
  std::vector<Node> nodes;

  template <class Row>
  double predict(const Row& x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }
};

struct GbrModel {
  double base_prediction = 0.0;
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  std::size_t n_features = 0;
  /// Squared-error training loss after each stage (index 0 = base only).
  std::vector<double> train_loss;
};

namespace model_detail {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

inline Split best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& r,
                        const std::vector<std::size_t>& idx, int min_leaf) {
  Split best;
  const std::size_t n = idx.size();
  if (n < 2 * static_cast<std::size_t>(min_leaf)) return best;
  double total = 0.0;
  for (auto i : idx) total += r(static_cast<Eigen::Index>(i));
  const double base = total * total / static_cast<double>(n);
  // Gains below this are treated as zero (pure rounding).
  double scale = 0.0;
  for (auto i : idx) scale += r(static_cast<Eigen::Index>(i)) * r(static_cast<Eigen::Index>(i));
  const double eps = 1e-12 * std::max(scale, 1e-300);

  std::vector<std::size_t> order(idx);
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x(static_cast<Eigen::Index>(a), f) < x(static_cast<Eigen::Index>(b), f);
    });
    double left = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      left += r(static_cast<Eigen::Index>(order[p]));
      const double v = x(static_cast<Eigen::Index>(order[p]), f);
      const double v_next = x(static_cast<Eigen::Index>(order[p + 1]), f);
      if (!(v < v_next)) continue;
      const std::size_t nl = p + 1, nr = n - nl;
      if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) continue;
      const double right = total - left;
      const double gain = left * left / static_cast<double>(nl) +
                          right * right / static_cast<double>(nr) - base;
      if (gain > eps && gain > best.gain) {
        best.feature = static_cast<int>(f);
        best.threshold = v + (v_next - v) / 2.0;
        best.gain = gain;
      }
    }
  }
  return best;
}

inline int grow(RegressionTree& tree, const Eigen::MatrixXd& x, const Eigen::VectorXd& r,
                std::vector<std::size_t> idx, int depth, const GbrParams& p) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  double sum = 0.0;
  for (auto i : idx) sum += r(static_cast<Eigen::Index>(i));
  tree.nodes.back().value = sum / static_cast<double>(idx.size());
  if (depth >= p.max_depth) return id;
  const auto s = best_split(x, r, idx, p.min_samples_leaf);
  if (s.feature < 0) return id;

  std::vector<std::size_t> li, ri;
  for (auto i : idx) (x(static_cast<Eigen::Index>(i), s.feature) <= s.threshold ? li : ri).push_back(i);
  idx.clear();
  idx.shrink_to_fit();
  const int l = grow(tree, x, r, std::move(li), depth + 1, p);
  const int rr = grow(tree, x, r, std::move(ri), depth + 1, p);
  auto& node = tree.nodes[static_cast<std::size_t>(id)];
  node.feature = s.feature;
  node.threshold = s.threshold;
  node.gain = s.gain;
  node.left = l;
  node.right = rr;
  return id;
}

}  // namespace model_detail

/// Stagewise boosting of depth-limited trees on squared-error residuals.
/// Split candidates are midpoints between consecutive distinct values; equal
/// gains keep the lower feature index, then the lower threshold.
inline GbrModel fit_gbr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GbrParams& params = {}) {
  params.validate();
  model_detail::check_fit_shape(x, y, "fit_gbr");
  if (x.rows() < 2 * params.min_samples_leaf)
    throw InvalidArgument("fit_gbr: " + std::to_string(x.rows()) + " rows is fewer than 2*min_samples_leaf");

  GbrModel model;
  model.learning_rate = params.learning_rate;
  model.n_features = static_cast<std::size_t>(x.cols());
  model.base_prediction = y.mean();
  Eigen::VectorXd pred = Eigen::VectorXd::Constant(y.size(), model.base_prediction);
  model.train_loss.push_back((y - pred).squaredNorm());

  std::vector<std::size_t> all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), std::size_t{0});
  model.trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    const Eigen::VectorXd residual = y - pred;
    RegressionTree tree;
    model_detail::grow(tree, x, residual, all, 0, params);
    for (Eigen::Index i = 0; i < x.rows(); ++i) pred(i) += params.learning_rate * tree.predict(x.row(i));
    model.trees.push_back(std::move(tree));
    model.train_loss.push_back((y - pred).squaredNorm());
  }
  return model;
}

inline Eigen::VectorXd predict_gbr(const GbrModel& model, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != model.n_features)
    throw InvalidArgument("predict_gbr: " + std::to_string(x.cols()) + " columns, model has " +
                          std::to_string(model.n_features));
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (const auto& t : model.trees) s += t.predict(x.row(i));
    out(i) = model.base_prediction + model.learning_rate * s;
  }
  return out;
}

// ---------------------------------------------------------------------------

inline double mae(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size()) throw InvalidArgument("mae: length mismatch");
  if (pred.size() < 1) throw InvalidArgument("mae: empty input");
  return (pred - truth).cwiseAbs().mean();
}

namespace model_detail {

inline Eigen::VectorXd normalized(Eigen::VectorXd v) {
  const double s = v.sum();
  if (s > 0.0) v /= s;
  return v;
}

}  // namespace model_detail

/// |w_i| * scale_i, normalized to sum to 1 (scale: training-column std).
inline Eigen::VectorXd importance(const LinearModel& model, const Eigen::VectorXd& feature_scales) {
  if (feature_scales.size() != model.weights.size())
    throw InvalidArgument("importance: scale vector length does not match the model");
  return model_detail::normalized(model.weights.cwiseAbs().cwiseProduct(feature_scales.cwiseAbs()));
}

/// Total squared-error reduction credited to each feature over all splits,
/// normalized to sum to 1. Scales are not used.
inline Eigen::VectorXd importance(const GbrModel& model, const Eigen::VectorXd& = {}) {
  Eigen::VectorXd imp = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.n_features));
  for (const auto& t : model.trees)
    for (const auto& n : t.nodes)
      if (n.feature >= 0) imp(n.feature) += n.gain;
  return model_detail::normalized(std::move(imp));
}

/// Population standard deviation of each column.
inline Eigen::VectorXd column_std(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  return ((x.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(x.rows())).cwiseSqrt().transpose();
}

// ---------------------------------------------------------------------------
// Model kinds used by the selection and evaluation layers.

enum class ModelKind { linear, gbr };

inline std::string model_label(ModelKind m) { return m == ModelKind::linear ? "LR" : "GBR"; }

inline ModelKind parse_model(std::string name) {
  for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (name == "lr" || name == "linear") return ModelKind::linear;
  if (name == "gbr") return ModelKind::gbr;
  throw InvalidArgument("unknown model '" + name + "' (expected lr or gbr)");
}

using FittedModel = std::variant<LinearModel, GbrModel>;

inline FittedModel fit_model(ModelKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const GbrParams& gbr = {}) {
  if (kind == ModelKind::linear) return fit_linear(x, y);
  return fit_gbr(x, y, gbr);
}

inline Eigen::VectorXd predict(const FittedModel& m, const Eigen::MatrixXd& x) {
  return std::visit(
      [&](const auto& model) -> Eigen::VectorXd {
        if constexpr (std::is_same_v<std::decay_t<decltype(model)>, LinearModel>)
          return predict_linear(model, x);
        else
          return predict_gbr(model, x);
      },
      m);
}

inline Eigen::VectorXd importance(const FittedModel& m, const Eigen::VectorXd& scales) {
  return std::visit([&](const auto& model) { return importance(model, scales); }, m);
}

}  // namespace qafs

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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "qafs/error.hpp"
#include "qafs/random.hpp"

namespace qafs {

enum class ColumnKind { numeric, ordinal_encoded };

/// Feature matrix (rows = samples, columns = features) plus regression
/// target. Immutable once constructed.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd features, Eigen::VectorXd target,
          std::vector<std::string> feature_names,
          std::vector<ColumnKind> column_kinds)
      : features_(std::move(features)),
        target_(std::move(target)),
        names_(std::move(feature_names)),
        kinds_(std::move(column_kinds)) {
    if (features_.rows() != target_.size())
      throw InvalidArgument("dataset: feature rows (" +
                            std::to_string(features_.rows()) +
                            ") != target length (" +
                            std::to_string(target_.size()) + ")");
    if (features_.rows() < 2)
      throw InvalidArgument("dataset: need at least 2 rows");
    if (features_.cols() < 1)
      throw InvalidArgument("dataset: need at least 1 feature column");
    if (names_.size() != static_cast<std::size_t>(features_.cols()) ||
        kinds_.size() != names_.size())
      throw InvalidArgument("dataset: metadata length != column count");
    if (!features_.allFinite() || !target_.allFinite())
      throw InvalidArgument("dataset: non-finite value");
    std::unordered_set<std::string> seen;
    for (const auto& n : names_)
      if (!seen.insert(n).second)
        throw InvalidArgument("dataset: duplicate feature name '" + n + "'");
  }

  /// Numeric dataset with generated names x1..xM.
  static Dataset numeric(Eigen::MatrixXd features, Eigen::VectorXd target) {
    const auto m = static_cast<std::size_t>(features.cols());
    std::vector<std::string> names;
    names.reserve(m);
    for (std::size_t j = 0; j < m; ++j) names.push_back("x" + std::to_string(j + 1));
    return Dataset(std::move(features), std::move(target), std::move(names),
                   std::vector<ColumnKind>(m, ColumnKind::numeric));
  }

  std::size_t rows() const { return static_cast<std::size_t>(features_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(features_.cols()); }

  const Eigen::MatrixXd& features() const { return features_; }
  const Eigen::VectorXd& target() const { return target_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  const std::vector<ColumnKind>& column_kinds() const { return kinds_; }

  std::span<const double> column(std::size_t j) const {
    return {features_.col(static_cast<Eigen::Index>(j)).data(), rows()};
  }
  std::span<const double> target_span() const {
    return {target_.data(), rows()};
  }

  Dataset select_rows(std::span<const std::size_t> row_ids) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(row_ids.size()), features_.cols());
    Eigen::VectorXd y(static_cast<Eigen::Index>(row_ids.size()));
    for (std::size_t r = 0; r < row_ids.size(); ++r) {
      if (row_ids[r] >= rows()) throw InvalidArgument("select_rows: row out of range");
      const auto src = static_cast<Eigen::Index>(row_ids[r]);
      x.row(static_cast<Eigen::Index>(r)) = features_.row(src);
      y(static_cast<Eigen::Index>(r)) = target_(src);
    }
    return Dataset(std::move(x), std::move(y), names_, kinds_);
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.names_ == b.names_ && a.kinds_ == b.kinds_ &&
           a.features_.rows() == b.features_.rows() &&
           a.features_.cols() == b.features_.cols() &&
           a.features_ == b.features_ && a.target_ == b.target_;
  }

 private:
  Eigen::MatrixXd features_;
  Eigen::VectorXd target_;
  std::vector<std::string> names_;
  std::vector<ColumnKind> kinds_;
};

/// Selection indicator over the M feature columns.
class FeatureMask {
 public:
  FeatureMask() = default;
  explicit FeatureMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto& b : bits_) {
      if (b > 1) throw InvalidArgument("FeatureMask: bits must be 0 or 1");
      k_ += b;
    }
  }

  static FeatureMask none(std::size_t m) {
    return FeatureMask(std::vector<std::uint8_t>(m, 0));
  }
  static FeatureMask all(std::size_t m) {
    return FeatureMask(std::vector<std::uint8_t>(m, 1));
  }
  static FeatureMask from_indices(std::size_t m, std::span<const std::size_t> idx) {
    std::vector<std::uint8_t> bits(m, 0);
    for (auto i : idx) {
      if (i >= m) throw InvalidArgument("FeatureMask: index out of range");
      bits[i] = 1;
    }
    return FeatureMask(std::move(bits));
  }

  std::size_t size() const { return bits_.size(); }
  std::size_t k() const { return k_; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(k_);
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) out.push_back(i);
    return out;
  }

  std::string to_string() const {
    std::string s;
    s.reserve(bits_.size());
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    return s;
  }

  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
  friend auto operator<=>(const FeatureMask& a, const FeatureMask& b) {
    return a.bits_ <=> b.bits_;
  }

 private:
  std::vector<std::uint8_t> bits_;
  std::size_t k_ = 0;
};

struct SplitPlan {
  double train_fraction = 0.7;
  std::size_t n_repeats = 3;
  std::uint64_t seed = 0;
};

struct TrainTestSplit {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  Dataset train;
  Dataset test;
};

// ---------------------------------------------------------------------------
// Friedman #1 synthetic regression problem.

/// Noise-free response of the Friedman #1 function. Only the first five
/// entries of `x` contribute.
inline double friedman1_response(std::span<const double> x) {
  if (x.size() < 5) throw InvalidArgument("friedman1_response: need 5 inputs");
  constexpr double pi = std::numbers::pi;
  const double d = x[2] - 0.5;
  return 10.0 * std::sin(pi * x[0] * x[1]) + 20.0 * d * d + 10.0 * x[3] +
         5.0 * x[4];
}

/// Features i.i.d. uniform on [0, 1]; target is the Friedman #1 response
/// plus Normal(0, noise_sigma^2) noise. Columns beyond the fifth carry no
/// signal.
inline Dataset generate_friedman1(std::size_t n_samples, std::size_t n_features,
                                  double noise_sigma, std::uint64_t seed) {
  if (n_features < 5)
    throw InvalidArgument("generate_friedman1: n_features must be >= 5");
  if (n_samples < 2)
    throw InvalidArgument("generate_friedman1: a dataset needs at least 2 rows");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw InvalidArgument("generate_friedman1: noise_sigma must be finite and >= 0");

  const auto n = static_cast<Eigen::Index>(n_samples);
  const auto m = static_cast<Eigen::Index>(n_features);
  Eigen::MatrixXd x(n, m);
  Eigen::VectorXd y(n);
  Engine feature_rng(derive_seed(seed, 0));
  Engine noise_rng(derive_seed(seed, 1));
  std::vector<double> row(n_features);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      row[static_cast<std::size_t>(c)] = uniform01(feature_rng);
      x(r, c) = row[static_cast<std::size_t>(c)];
    }
    const double eps = standard_normal(noise_rng);
    y(r) = friedman1_response(row) + noise_sigma * eps;
  }
  return Dataset::numeric(std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// Encoding and column/row manipulation.

/// Maps labels to 0, 1, 2, ... in order of first appearance.
inline std::vector<double> ordinal_encode(std::span<const std::string> values) {
  std::unordered_map<std::string, double> codes;
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values) {
    auto [it, inserted] = codes.try_emplace(v, static_cast<double>(codes.size()));
    out.push_back(it->second);
  }
  return out;
}

inline Dataset filter_columns(const Dataset& data, const FeatureMask& mask) {
  if (mask.size() != data.cols())
    throw InvalidArgument("filter_columns: mask length " + std::to_string(mask.size()) +
                          " != column count " + std::to_string(data.cols()));
  if (mask.k() == 0)
    throw InvalidArgument("filter_columns: mask selects no features");
  const auto keep = mask.indices();
  Eigen::MatrixXd x(data.features().rows(), static_cast<Eigen::Index>(keep.size()));
  std::vector<std::string> names;
  std::vector<ColumnKind> kinds;
  for (std::size_t c = 0; c < keep.size(); ++c) {
    x.col(static_cast<Eigen::Index>(c)) = data.features().col(static_cast<Eigen::Index>(keep[c]));
    names.push_back(data.feature_names()[keep[c]]);
    kinds.push_back(data.column_kinds()[keep[c]]);
  }
  return Dataset(std::move(x), data.target(), std::move(names), std::move(kinds));
}

inline std::size_t train_size(double train_fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
}

/// Row permutation for one split repeat. Depends only on (seed, repeat).
inline std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed,
                                                  std::size_t repeat) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Engine rng(derive_seed(seed, 0x5b117ULL, repeat));
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
  }
  return perm;
}

/// Repeated random train/test partitions (Monte Carlo cross-validation).
inline std::vector<TrainTestSplit> split(const Dataset& data, const SplitPlan& plan) {
  if (!(plan.train_fraction > 0.0 && plan.train_fraction < 1.0))
    throw InvalidArgument("split: train_fraction must be in (0, 1)");
  if (plan.n_repeats < 1) throw InvalidArgument("split: n_repeats must be >= 1");
  const std::size_t n = data.rows();
  const std::size_t n_train = train_size(plan.train_fraction, n);
  // Each side must still be a valid Dataset (>= 2 rows).
  if (n_train < 2 || n - n_train < 2)
    throw InvalidArgument("split: " + std::to_string(n) + " rows at fraction " +
                          std::to_string(plan.train_fraction) +
                          " leaves an empty or single-row side");
  std::vector<TrainTestSplit> out;
  out.reserve(plan.n_repeats);
  for (std::size_t r = 0; r < plan.n_repeats; ++r) {
    auto perm = split_permutation(n, plan.seed, r);
    std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    auto train_data = data.select_rows(train);
    auto test_data = data.select_rows(test);
    out.push_back({std::move(train), std::move(test), std::move(train_data), std::move(test_data)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// UCI Automobile (imports-85) loader.

enum class MissingPolicy { drop_row_if_target_missing_impute_rest, drop_any_missing };

inline const std::vector<std::string>& imports85_column_names() {
  static const std::vector<std::string> names = {
      "symboling",        "normalized-losses", "make",         "fuel-type",
      "aspiration",       "num-of-doors",      "body-style",   "drive-wheels",
      "engine-location",  "wheel-base",        "length",       "width",
      "height",           "curb-weight",       "engine-type",  "num-of-cylinders",
      "engine-size",      "fuel-system",       "bore",         "stroke",
      "compression-ratio", "horsepower",       "peak-rpm",     "city-mpg",
      "highway-mpg",      "price"};
  return names;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Parses imports-85 formatted text. `source` names the input in errors.
inline Dataset parse_auto_csv(std::string_view text, MissingPolicy policy,
                              std::string_view source = "<input>") {
  constexpr std::size_t n_fields = 26;
  constexpr std::size_t target_col = n_fields - 1;
  const auto& names = imports85_column_names();
  const std::string src(source);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = detail::trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      auto f = detail::trim(line.substr(start, comma == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : comma - start));
      fields.emplace_back(f);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != n_fields)
      throw LoadError(src + ": row " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected 26");
    rows.push_back(std::move(fields));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) throw LoadError(src + ": no data rows");

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f[target_col] == "?") continue;
    double price = 0.0;
    if (!detail::parse_double(f[target_col], price))
      throw LoadError(src + ": row " + std::to_string(line_numbers[r]) +
                      ", column 26 (price): not a number: '" + f[target_col] + "'");
    if (policy == MissingPolicy::drop_any_missing &&
        std::any_of(f.begin(), f.end(), [](const std::string& s) { return s == "?"; }))
      continue;
    keep.push_back(r);
  }
  if (keep.empty())
    throw LoadError(src + ": zero rows survive missing-value filtering (column 26, price)");
  if (keep.size() < 2)
    throw LoadError(src + ": only one row survives missing-value filtering");

  const auto n = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(target_col));
  Eigen::VectorXd y(n);
  std::vector<ColumnKind> kinds;
  for (std::size_t c = 0; c < target_col; ++c) {
    bool numeric = true;
    for (auto r : keep) {
      const auto& v = rows[r][c];
      double d = 0.0;
      if (v != "?" && !detail::parse_double(v, d)) {
        numeric = false;
        break;
      }
    }
    if (numeric) {
      std::vector<double> present;
      for (auto r : keep) {
        double d = 0.0;
        if (detail::parse_double(rows[r][c], d)) present.push_back(d);
      }
      if (present.empty())
        throw LoadError(src + ": column " + std::to_string(c + 1) + " (" + names[c] +
                        ") has no values to impute from");
      const double fill = detail::median(present);
      for (std::size_t i = 0; i < keep.size(); ++i) {
        double d = fill;
        detail::parse_double(rows[keep[i]][c], d);
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = d;
      }
      kinds.push_back(ColumnKind::numeric);
    } else {
      // '?' in a categorical column is just another label.
      std::vector<std::string> labels;
      labels.reserve(keep.size());
      for (auto r : keep) labels.push_back(rows[r][c]);
      const auto codes = ordinal_encode(labels);
      for (std::size_t i = 0; i < codes.size(); ++i)
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = codes[i];
      kinds.push_back(ColumnKind::ordinal_encoded);
    }
  }
  for (std::size_t i = 0; i < keep.size(); ++i)
    detail::parse_double(rows[keep[i]][target_col], y(static_cast<Eigen::Index>(i)));

  std::vector<std::string> feature_names(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(target_col));
  return Dataset(std::move(x), std::move(y), std::move(feature_names), std::move(kinds));
}

inline Dataset load_auto_csv(const std::string& path,
                             MissingPolicy policy = MissingPolicy::drop_row_if_target_missing_impute_rest) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw LoadError(path + ": read failed");
  return parse_auto_csv(buf.str(), policy, path);
}

}  // namespace qafs

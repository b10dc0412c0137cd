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

// Maximal-information statistics: the approximate characteristic matrix,
// MIC, the maximal characteristic matrix and GMIC.
//
// For each grid shape (i, j) the characteristic matrix holds the largest
// mutual information (bits) achievable by a grid with at most i columns and
// j rows, normalized by log2 min(i, j). The search equipartitions one axis
// and optimizes the other by dynamic programming over clump boundaries; it
// is run in both orientations and the larger value is kept.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qafs/error.hpp"

namespace qafs {

struct GridShape {
  int x_bins = 2;
  int y_bins = 2;
  int size() const { return x_bins * y_bins; }
  friend auto operator<=>(const GridShape&, const GridShape&) = default;
};

class CharacteristicMatrix {
 public:
  CharacteristicMatrix() = default;
  CharacteristicMatrix(std::size_t sample_count, std::map<GridShape, double> entries)
      : n_(sample_count), entries_(std::move(entries)) {
    for (const auto& [shape, v] : entries_) {
      if (shape.x_bins < 2 || shape.y_bins < 2)
        throw InvalidArgument("CharacteristicMatrix: grid dimensions must be >= 2");
      if (!(v >= 0.0 && v <= 1.0))
        throw InvalidArgument("CharacteristicMatrix: entries must lie in [0, 1]");
    }
  }

  std::size_t sample_count() const { return n_; }
  const std::map<GridShape, double>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  double at(int x_bins, int y_bins) const {
    auto it = entries_.find({x_bins, y_bins});
    if (it == entries_.end())
      throw InvalidArgument("CharacteristicMatrix: shape (" + std::to_string(x_bins) + "," +
                            std::to_string(y_bins) + ") not admissible");
    return it->second;
  }

  double max_entry() const {
    double m = 0.0;
    for (const auto& [_, v] : entries_) m = std::max(m, v);
    return m;
  }

 private:
  std::size_t n_ = 0;
  std::map<GridShape, double> entries_;
};

struct MineParams {
  double grid_exponent = 0.6;
  int clump_factor = 15;
};

/// Largest grid size i*j considered for n samples: floor(n^exponent), never
/// below 4 so that the 2x2 grid is always admissible.
inline int max_grid_size(std::size_t n, double grid_exponent) {
  const double b = std::floor(std::pow(static_cast<double>(n), grid_exponent) + 1e-9);
  return std::max(4, static_cast<int>(b));
}

inline std::vector<GridShape> admissible_shapes(int max_size) {
  std::vector<GridShape> out;
  for (int i = 2; 2 * i <= max_size; ++i)
    for (int j = 2; i * j <= max_size; ++j) out.push_back({i, j});
  return out;
}

namespace mine_detail {

/// Sorted order of `v` (stable, so ties keep input order).
inline std::vector<std::size_t> argsort(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  return idx;
}

/// Assigns each point to one of at most `rows` bins along `v` so that the
/// bins hold roughly equal counts and tied values never straddle a boundary.
/// Returns per-point row labels and the number of rows actually used.
inline std::pair<std::vector<int>, int> equipartition(std::span<const double> v, int rows) {
  const std::size_t n = v.size();
  const auto order = argsort(v);
  std::vector<int> label(n, 0);
  int current = 0;
  std::size_t filled = 0;
  double desired = static_cast<double>(n) / rows;
  std::size_t i = 0;
  while (i < n) {
    std::size_t s = 1;
    while (i + s < n && v[order[i + s]] == v[order[i]]) ++s;
    const double with = std::abs(static_cast<double>(filled + s) - desired);
    const double without = std::abs(static_cast<double>(filled) - desired);
    if (filled != 0 && with >= without && current + 1 < rows) {
      ++current;
      filled = 0;
      desired = static_cast<double>(n - i) / (rows - current);
    }
    for (std::size_t t = 0; t < s; ++t) label[order[i + t]] = current;
    i += s;
    filled += s;
  }
  return {std::move(label), current + 1};
}

/// Contiguous blocks of x-sorted points that a column boundary may separate.
/// `ends[t]` is the number of sorted points in the first t+1 blocks and
/// `sorted_rows` the row label of each point in x order.
struct Blocks {
  std::vector<std::size_t> ends;
  std::vector<int> sorted_rows;
};

/// Clumps: maximal runs of x-sorted points sharing one row. Points with tied
/// x always share a block; a tie spanning several rows is its own block.
inline Blocks clumps(std::span<const double> x, std::span<const int> rows) {
  const std::size_t n = x.size();
  const auto order = argsort(x);
  Blocks b;
  b.sorted_rows.resize(n);
  for (std::size_t t = 0; t < n; ++t) b.sorted_rows[t] = rows[order[t]];

  int prev_label = -2;
  std::size_t i = 0;
  while (i < n) {
    std::size_t s = 1;
    while (i + s < n && x[order[i + s]] == x[order[i]]) ++s;
    int label = b.sorted_rows[i];
    for (std::size_t t = 1; t < s; ++t)
      if (b.sorted_rows[i + t] != label) label = -1;
    if (label >= 0 && label == prev_label)
      b.ends.back() = i + s;
    else
      b.ends.push_back(i + s);
    prev_label = label;
    i += s;
  }
  return b;
}

/// Merges blocks down to at most `limit` superclumps of roughly equal size.
inline Blocks superclumps(Blocks b, std::size_t limit) {
  if (b.ends.size() <= limit) return b;
  std::vector<double> block_of_point(b.sorted_rows.size());
  std::size_t start = 0;
  for (std::size_t c = 0; c < b.ends.size(); ++c) {
    for (std::size_t t = start; t < b.ends[c]; ++t) block_of_point[t] = static_cast<double>(c);
    start = b.ends[c];
  }
  auto [group, used] = equipartition(block_of_point, static_cast<int>(limit));
  std::vector<std::size_t> ends;
  for (std::size_t t = 0; t < group.size(); ++t)
    if (t + 1 == group.size() || group[t + 1] != group[t]) ends.push_back(t + 1);
  b.ends = std::move(ends);
  return b;
}

inline double entropy_bits(std::span<const std::size_t> counts, std::size_t total) {
  double h = 0.0;
  for (auto c : counts)
    if (c) {
      const double p = static_cast<double>(c) / static_cast<double>(total);
      h -= p * std::log2(p);
    }
  return h;
}

/// Best mutual information (bits) between the fixed row partition and a
/// column partition with at most l columns drawn from block boundaries, for
/// every l in [2, max_cols]. Index l of the result; entries 0 and 1 are 0.
inline std::vector<double> optimize_columns(const Blocks& b, int n_rows, int max_cols) {
  const std::size_t n = b.sorted_rows.size();
  const std::size_t k = b.ends.size();
  const auto q = static_cast<std::size_t>(n_rows);

  // cum[t * q + r]: points with row r among the first t blocks.
  std::vector<std::size_t> cum((k + 1) * q, 0);
  std::size_t start = 0;
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t r = 0; r < q; ++r) cum[(t + 1) * q + r] = cum[t * q + r];
    for (std::size_t p = start; p < b.ends[t]; ++p)
      ++cum[(t + 1) * q + static_cast<std::size_t>(b.sorted_rows[p])];
    start = b.ends[t];
  }
  std::vector<std::size_t> row_totals(cum.end() - static_cast<std::ptrdiff_t>(q), cum.end());
  const double h_rows = entropy_bits(row_totals, n);

  const double inv_n = 1.0 / static_cast<double>(n);
  auto pos = [&](std::size_t t) { return t == 0 ? std::size_t{0} : b.ends[t - 1]; };
  // Column over blocks (s, t]: sum_r p(col, r) * log2 p(r | col). Summing it
  // over columns gives H(rows) - H(rows, cols) + H(cols) - H(rows).
  auto column_term = [&](std::size_t s, std::size_t t) {
    const double width = static_cast<double>(pos(t) - pos(s));
    double acc = 0.0;
    for (std::size_t r = 0; r < q; ++r) {
      const auto c = cum[t * q + r] - cum[s * q + r];
      if (c) acc += static_cast<double>(c) * std::log2(static_cast<double>(c) / width);
    }
    return acc * inv_n;
  };

  const auto cols = static_cast<std::size_t>(std::max(max_cols, 1));
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  // best[l][t]: best sum of column terms splitting the first t blocks into
  // exactly l non-empty columns.
  std::vector<std::vector<double>> best(cols + 1, std::vector<double>(k + 1, neg_inf));
  for (std::size_t t = 1; t <= k; ++t) best[1][t] = column_term(0, t);
  for (std::size_t l = 2; l <= cols; ++l)
    for (std::size_t t = l; t <= k; ++t) {
      double m = neg_inf;
      for (std::size_t s = l - 1; s < t; ++s) {
        if (best[l - 1][s] == neg_inf) continue;
        m = std::max(m, best[l - 1][s] + column_term(s, t));
      }
      best[l][t] = m;
    }

  std::vector<double> out(cols + 1, 0.0);
  double running = neg_inf;
  for (std::size_t l = 1; l <= cols; ++l) {
    running = std::max(running, best[l][k]);
    if (l >= 2) out[l] = std::max(0.0, h_rows + running);
  }
  return out;
}

/// One orientation: `fixed` is equipartitioned into j rows for every j, the
/// other axis optimized. Writes raw (un-normalized) bits into `raw` keyed by
/// (optimized bins, fixed bins).
inline void fill_orientation(std::span<const double> free_axis, std::span<const double> fixed_axis,
                             int max_size, int clump_factor,
                             std::map<GridShape, double>& raw, bool transpose) {
  for (int j = 2; 2 * j <= max_size; ++j) {
    const int max_cols = max_size / j;
    if (max_cols < 2) continue;
    auto [rows, used] = equipartition(fixed_axis, j);
    auto blocks = superclumps(clumps(free_axis, rows),
                              static_cast<std::size_t>(clump_factor) * static_cast<std::size_t>(max_cols));
    const auto mi = optimize_columns(blocks, used, max_cols);
    for (int i = 2; i <= max_cols; ++i) {
      const GridShape shape = transpose ? GridShape{j, i} : GridShape{i, j};
      auto& slot = raw[shape];
      slot = std::max(slot, mi[static_cast<std::size_t>(i)]);
    }
  }
}

inline void check_pair(std::span<const double> x, std::span<const double> y, const char* what) {
  if (x.size() != y.size())
    throw InvalidArgument(std::string(what) + ": length mismatch (" + std::to_string(x.size()) +
                          " vs " + std::to_string(y.size()) + ")");
  if (x.size() < 4) throw InvalidArgument(std::string(what) + ": need at least 4 samples");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw InvalidArgument(std::string(what) + ": non-finite input");
}

}  // namespace mine_detail

inline CharacteristicMatrix characteristic_matrix(std::span<const double> x,
                                                  std::span<const double> y,
                                                  const MineParams& params = {}) {
  mine_detail::check_pair(x, y, "characteristic_matrix");
  if (!(params.grid_exponent > 0.0 && params.grid_exponent < 1.0))
    throw InvalidArgument("characteristic_matrix: grid_exponent must be in (0, 1)");
  if (params.clump_factor < 1)
    throw InvalidArgument("characteristic_matrix: clump_factor must be >= 1");

  const int b = max_grid_size(x.size(), params.grid_exponent);
  std::map<GridShape, double> raw;
  for (const auto& s : admissible_shapes(b)) raw[s] = 0.0;
  mine_detail::fill_orientation(x, y, b, params.clump_factor, raw, false);
  mine_detail::fill_orientation(y, x, b, params.clump_factor, raw, true);
  for (auto& [shape, v] : raw)
    v = std::clamp(v / std::log2(std::min(shape.x_bins, shape.y_bins)), 0.0, 1.0);
  return CharacteristicMatrix(x.size(), std::move(raw));
}

/// Maximal information coefficient.
inline double mic(std::span<const double> x, std::span<const double> y,
                  const MineParams& params = {}) {
  return characteristic_matrix(x, y, params).max_entry();
}

/// Entry (i, j) becomes the largest entry over shapes whose grid size does
/// not exceed i*j, so values are non-decreasing in grid size.
inline CharacteristicMatrix maximal_characteristic_matrix(const CharacteristicMatrix& c) {
  std::map<int, double> best_by_size;
  for (const auto& [shape, v] : c.entries()) {
    auto& slot = best_by_size[shape.size()];
    slot = std::max(slot, v);
  }
  double running = 0.0;
  for (auto& [size, v] : best_by_size) {
    running = std::max(running, v);
    v = running;
  }
  std::map<GridShape, double> out;
  for (const auto& [shape, v] : c.entries()) out[shape] = best_by_size[shape.size()];
  return CharacteristicMatrix(c.sample_count(), std::move(out));
}

/// Generalized p-mean of the entries. p = 0 is the geometric mean. For
/// p < 0 entries below 1e-12 are raised to 1e-12 first.
inline double generalized_mean(const CharacteristicMatrix& c, double p) {
  if (!std::isfinite(p)) throw InvalidArgument("gmic: exponent must be finite");
  if (c.empty()) return 0.0;
  constexpr double floor_value = 1e-12;
  const auto z = static_cast<double>(c.entries().size());
  double acc = 0.0;
  if (p == 0.0) {
    for (const auto& [_, v] : c.entries()) acc += std::log(std::max(v, floor_value));
    return std::clamp(std::exp(acc / z), 0.0, 1.0);
  }
  for (const auto& [_, v] : c.entries()) {
    const double e = p < 0.0 ? std::max(v, floor_value) : v;
    acc += std::pow(e, p);
  }
  return std::clamp(std::pow(acc / z, 1.0 / p), 0.0, 1.0);
}

/// Generalized mean information coefficient over the admissible shapes.
inline double gmic(std::span<const double> x, std::span<const double> y, double p = -1.0,
                   const MineParams& params = {}) {
  if (!std::isfinite(p)) throw InvalidArgument("gmic: exponent must be finite");
  return generalized_mean(maximal_characteristic_matrix(characteristic_matrix(x, y, params)), p);
}

}  // namespace qafs

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

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qafs/error.hpp"
#include "qafs/mine.hpp"
#include "qafs/random.hpp"

namespace qafs {

/// Sample Pearson correlation. Defined as 0 when either input has zero
/// variance.
inline double pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw InvalidArgument("pcc: length mismatch (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  if (x.size() < 2) throw InvalidArgument("pcc: need at least 2 samples");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!std::isfinite(sxy) || !std::isfinite(sxx) || !std::isfinite(syy))
    throw InvalidArgument("pcc: non-finite input");
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace mi_detail {

inline std::uint64_t content_hash(std::span<const double> v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double d : v) {
    h ^= std::bit_cast<std::uint64_t>(d);
    h *= 0x100000001b3ULL;
  }
  return mix64(h ^ v.size());
}

/// Adds uniform noise of amplitude 1e-10 * range so tied values (ordinal
/// codes) get distinct positions. The noise stream is seeded from the
/// column's own contents, so a column is perturbed identically whichever
/// argument position it occupies.
inline std::vector<double> jitter(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double range = *hi - *lo;
  const double scale = 1e-10 * (range > 0.0 ? range : 1.0);
  Engine rng(content_hash(v));
  std::vector<double> out(v.begin(), v.end());
  for (auto& d : out) d += scale * (uniform01(rng) - 0.5);
  return out;
}

/// Number of entries of sorted `s` strictly within `radius` of `c`,
/// excluding one copy of `c` itself.
inline std::size_t count_within(const std::vector<double>& s, double c, double radius) {
  auto lo = std::upper_bound(s.begin(), s.end(), c - radius);
  auto hi = std::lower_bound(s.begin(), s.end(), c + radius);
  const auto n = static_cast<std::size_t>(hi - lo);
  return n > 0 ? n - 1 : 0;
}

}  // namespace mi_detail

/// k-nearest-neighbour mutual information estimate in nats (Kraskov,
/// Stoegbauer and Grassberger, first estimator, max-norm neighbourhoods):
///   psi(N) + psi(k) - < psi(n_x + 1) + psi(n_y + 1) >
/// where n_x, n_y count marginal neighbours strictly inside the distance to
/// the k-th joint neighbour. Can be slightly negative.
inline double mi_knn(std::span<const double> x, std::span<const double> y, int k_neighbors = 3) {
  if (x.size() != y.size())
    throw InvalidArgument("mi_knn: length mismatch (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  if (k_neighbors < 1) throw InvalidArgument("mi_knn: k_neighbors must be >= 1");
  const std::size_t n = x.size();
  const auto k = static_cast<std::size_t>(k_neighbors);
  if (n <= k)
    throw InvalidArgument("mi_knn: need more samples (" + std::to_string(n) +
                          ") than neighbours (" + std::to_string(k) + ")");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw InvalidArgument("mi_knn: non-finite input");

  const auto jx = mi_detail::jitter(x);
  const auto jy = mi_detail::jitter(y);
  auto sx = jx;
  auto sy = jy;
  std::sort(sx.begin(), sx.end());
  std::sort(sy.begin(), sy.end());

  using boost::math::digamma;
  std::vector<double> dist(n - 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t t = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist[t++] = std::max(std::abs(jx[i] - jx[j]), std::abs(jy[i] - jy[j]));
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    const double eps = dist[k - 1];
    const auto nx = mi_detail::count_within(sx, jx[i], eps);
    const auto ny = mi_detail::count_within(sy, jy[i], eps);
    acc += digamma(static_cast<double>(nx + 1)) + digamma(static_cast<double>(ny + 1));
  }
  return digamma(static_cast<double>(n)) + digamma(static_cast<double>(k)) -
         acc / static_cast<double>(n);
}

/// Dependence measure used to score relevancy and redundancy.
struct MetricKind {
  enum class Variant { pcc, mi, mic, gmic };

  Variant variant = Variant::pcc;
  int k_neighbors = 3;
  double gmic_exponent = -1.0;
  double grid_exponent = 0.6;

  static MetricKind pcc_metric() { return {Variant::pcc}; }
  static MetricKind mi_metric(int k = 3) { return {Variant::mi, k}; }
  static MetricKind mic_metric() { return {Variant::mic}; }
  static MetricKind gmic_metric(double p = -1.0) { return {Variant::gmic, 3, p}; }

  void validate() const {
    if (k_neighbors < 1) throw InvalidArgument("metric: k_neighbors must be >= 1");
    if (!(grid_exponent > 0.0 && grid_exponent < 1.0))
      throw InvalidArgument("metric: grid_exponent must be in (0, 1)");
    if (!std::isfinite(gmic_exponent)) throw InvalidArgument("metric: GMIC exponent must be finite");
  }

  /// Upper-case short name used in method labels (PCC, MI, MIC, GMIC).
  std::string label() const {
    switch (variant) {
      case Variant::pcc: return "PCC";
      case Variant::mi: return "MI";
      case Variant::mic: return "MIC";
      case Variant::gmic: return "GMIC";
    }
    return "?";
  }

  friend bool operator==(const MetricKind&, const MetricKind&) = default;
};

inline MetricKind parse_metric(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (name == "pcc") return MetricKind::pcc_metric();
  if (name == "mi") return MetricKind::mi_metric();
  if (name == "mic") return MetricKind::mic_metric();
  if (name == "gmic") return MetricKind::gmic_metric();
  throw InvalidArgument("unknown metric '" + name + "' (expected pcc, mi, mic or gmic)");
}

/// Non-negative dependence score: |pcc|, max(0, mi), mic or gmic.
inline double distance(const MetricKind& metric, std::span<const double> x,
                       std::span<const double> y) {
  metric.validate();
  const MineParams mine{metric.grid_exponent};
  switch (metric.variant) {
    case MetricKind::Variant::pcc: return std::abs(pcc(x, y));
    case MetricKind::Variant::mi: return std::max(0.0, mi_knn(x, y, metric.k_neighbors));
    case MetricKind::Variant::mic: return mic(x, y, mine);
    case MetricKind::Variant::gmic: return gmic(x, y, metric.gmic_exponent, mine);
  }
  return 0.0;
}

}  // namespace qafs

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

// Feature-subset selectors: the QUBO pipeline and the three baselines
// (all features, greedy MIC ranking, recursive feature elimination).
// Every selector sees only the training split.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "qafs/dataset.hpp"
#include "qafs/error.hpp"
#include "qafs/metrics.hpp"
#include "qafs/mine.hpp"
#include "qafs/models.hpp"
#include "qafs/parallel.hpp"
#include "qafs/qubo.hpp"
#include "qafs/random.hpp"
#include "qafs/remote.hpp"
#include "qafs/samplers.hpp"

namespace qafs {

struct SelectionResult {
  FeatureMask mask;
  std::string method_label;
  double select_time_us = 0.0;
  nlohmann::json metadata = nlohmann::json::object();
};

struct SamplerChoice {
  enum class Kind { simulated_annealing, exhaustive, remote };

  Kind kind = Kind::simulated_annealing;
  std::size_t shots = 10000;
  AnnealSchedule schedule{};
  std::string endpoint;
  int timeout_ms = 30000;
  /// On a remote error, run simulated annealing with the same seed instead.
  bool fallback_to_anneal = false;

  void validate() const {
    if (shots < 1) throw InvalidArgument("sampler: shots must be >= 1");
    schedule.validate();
    if (kind == Kind::remote && endpoint.empty())
      throw InvalidArgument("sampler: remote sampler needs an endpoint");
    if (timeout_ms < 1) throw InvalidArgument("sampler: timeout_ms must be >= 1");
  }
};

inline const char* sampler_name(SamplerChoice::Kind k) {
  switch (k) {
    case SamplerChoice::Kind::simulated_annealing: return "sa";
    case SamplerChoice::Kind::exhaustive: return "exhaustive";
    case SamplerChoice::Kind::remote: return "remote";
  }
  return "unknown";
}

inline SamplerChoice::Kind parse_sampler(const std::string& name) {
  if (name == "sa") return SamplerChoice::Kind::simulated_annealing;
  if (name == "exhaustive") return SamplerChoice::Kind::exhaustive;
  if (name == "remote") return SamplerChoice::Kind::remote;
  throw InvalidArgument("unknown sampler '" + name + "' (expected sa, exhaustive or remote)");
}

namespace selection_detail {

using Clock = std::chrono::steady_clock;

inline double micros_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

inline SampleSet run_sampler(const QuboProblem& problem, const SamplerChoice& s, std::uint64_t seed,
                             nlohmann::json& notes) {
  switch (s.kind) {
    case SamplerChoice::Kind::exhaustive:
      return exhaustive_solve(problem);
    case SamplerChoice::Kind::simulated_annealing:
      return simulated_anneal(problem, s.shots, s.schedule, seed);
    case SamplerChoice::Kind::remote:
      try {
        return remote_sample(problem, s.endpoint, s.shots, s.timeout_ms);
      } catch (const RemoteError& e) {
        if (!s.fallback_to_anneal) throw;
        notes.push_back(std::string("remote ") + to_string(e.kind()) + ", fell back to annealing: " + e.what());
        return simulated_anneal(problem, s.shots, s.schedule, seed);
      }
  }
  throw InvalidArgument("unknown sampler");
}

}  // namespace selection_detail

/// QUBO selection on an already-built relevance/redundancy matrix.
inline SelectionResult qafs_select(const QuboMatrix& q, const std::string& metric_label, double alpha,
                                   double lambda, std::size_t k, const SamplerChoice& sampler,
                                   std::size_t bootstrap, std::uint64_t seed) {
  sampler.validate();
  if (bootstrap < 1) throw InvalidArgument("qafs_select: bootstrap must be >= 1");
  const QuboProblem problem(q, alpha, lambda, k);

  nlohmann::json notes = nlohmann::json::array();
  std::vector<SampleSet> sets;
  std::vector<double> best_energies;
  double solve_us = 0.0;
  for (std::size_t b = 0; b < bootstrap; ++b) {
    auto set = selection_detail::run_sampler(problem, sampler, derive_seed(seed, b), notes);
    if (set.empty()) throw InvalidArgument("qafs_select: sampler returned no samples");
    best_energies.push_back(set.samples.front().energy);
    solve_us += set.solve_time_us;
    sets.push_back(std::move(set));
  }
  const auto all = merge(sets);

  FeatureMask winner = best_mask(all);
  double winner_energy = all.samples.front().energy;
  bool fell_back = false;
  if (winner.k() == 0) {
    const auto it = std::find_if(all.samples.begin(), all.samples.end(),
                                 [](const Sample& s) { return s.mask.k() > 0; });
    if (it == all.samples.end()) throw InvalidArgument("qafs_select: every sample is the empty mask");
    winner = it->mask;
    winner_energy = it->energy;
    fell_back = true;
  }

  SelectionResult out;
  out.mask = std::move(winner);
  out.method_label = "Q" + metric_label;
  out.select_time_us = solve_us;
  out.metadata = {{"sampler", sampler_name(sampler.kind)},
                  {"bootstrap", bootstrap},
                  {"shots", sampler.shots},
                  {"winning_energy", winner_energy},
                  {"bootstrap_best_energies", best_energies},
                  {"nonzero_fallback", fell_back}};
  if (!notes.empty()) out.metadata["notes"] = std::move(notes);
  return out;
}

/// Builds Q from the training split, then samples it `bootstrap` times
/// with seeds derived from `seed` and keeps the best mask over the union.
inline SelectionResult qafs_select(const Dataset& train, const MetricKind& metric, double alpha,
                                   double lambda, std::size_t k, const SamplerChoice& sampler,
                                   std::size_t bootstrap, std::uint64_t seed) {
  return qafs_select(build_q(train, metric), metric.label(), alpha, lambda, k, sampler, bootstrap, seed);
}

/// Keeps the top floor(fraction * M) columns (at least one) by MIC with the
/// target. Equal scores keep the lower column index.
inline SelectionResult greedy_ranked_select(const Dataset& train, double fraction = 0.5) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InvalidArgument("greedy_ranked_select: fraction must be in (0, 1]");
  const auto t0 = selection_detail::Clock::now();
  const std::size_t m = train.cols();
  std::vector<double> score(m);
  parallel_for(m, [&](std::size_t j) { score[j] = mic(train.column(j), train.target_span()); });
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m) + 1e-9)));
  order.resize(keep);

  SelectionResult out;
  out.mask = FeatureMask::from_indices(m, order);
  out.method_label = "GR";
  out.select_time_us = selection_detail::micros_since(t0);
  out.metadata = {{"fraction", fraction}, {"mic_scores", score}};
  return out;
}

/// Drops the least important remaining column one at a time until
/// `target_k` remain. Equal importances drop the lower original index.
inline SelectionResult rfe_select(const Dataset& train, ModelKind model, std::size_t target_k,
                                  const GbrParams& gbr = {}) {
  const std::size_t m = train.cols();
  if (target_k < 1 || target_k > m)
    throw InvalidArgument("rfe_select: target_k=" + std::to_string(target_k) + " outside [1, " +
                          std::to_string(m) + "]");
  const auto t0 = selection_detail::Clock::now();
  std::vector<std::size_t> remaining(m);
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::vector<std::size_t> eliminated;
  const Eigen::VectorXd y = train.target();
  for (std::size_t iter = 0; remaining.size() > target_k; ++iter) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(train.rows()), static_cast<Eigen::Index>(remaining.size()));
    for (std::size_t c = 0; c < remaining.size(); ++c)
      x.col(static_cast<Eigen::Index>(c)) = train.features().col(static_cast<Eigen::Index>(remaining[c]));
    Eigen::VectorXd imp;
    try {
      imp = importance(fit_model(model, x, y, gbr), column_std(x));
    } catch (const std::exception& e) {
      throw InvalidArgument("rfe_select: iteration " + std::to_string(iter) + ": " + e.what());
    }
    std::size_t worst = 0;
    for (std::size_t c = 1; c < remaining.size(); ++c)
      if (imp(static_cast<Eigen::Index>(c)) < imp(static_cast<Eigen::Index>(worst))) worst = c;
    eliminated.push_back(remaining[worst]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  SelectionResult out;
  out.mask = FeatureMask::from_indices(m, remaining);
  out.method_label = "RFE";
  out.select_time_us = selection_detail::micros_since(t0);
  out.metadata = {{"model", model_label(model)}, {"target_k", target_k}, {"elimination_order", eliminated}};
  return out;
}

inline SelectionResult all_features(const Dataset& train) {
  SelectionResult out;
  out.mask = FeatureMask::all(train.cols());
  out.method_label = "All";
  return out;
}

}  // namespace qafs

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
#include <array>
#include <bit>
#include <limits>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qafs/dataset.hpp"
#include "qafs/error.hpp"
#include "qafs/parallel.hpp"
#include "qafs/qubo.hpp"
#include "qafs/random.hpp"

namespace qafs {

struct Sample {
  FeatureMask mask;
  double energy = 0.0;
  std::size_t occurrences = 1;
};

struct SampleSet {
  std::vector<Sample> samples;  // ascending energy
  std::size_t shots = 0;
  double solve_time_us = 0.0;
  double wall_time_us = 0.0;
  /// Lowest energy above the minimum; set by the exhaustive solver when one
  /// exists.
  std::optional<double> runner_up_energy;

  bool empty() const { return samples.empty(); }
  std::size_t total_occurrences() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.occurrences;
    return n;
  }
};

struct AnnealSchedule {
  enum class Interpolation { geometric, linear };

  std::size_t sweeps = 200;
  double beta_start = 0.1;
  double beta_end = 10.0;
  Interpolation interpolation = Interpolation::geometric;

  void validate() const {
    if (sweeps < 1) throw InvalidArgument("AnnealSchedule: sweeps must be >= 1");
    if (!(beta_start > 0.0) || !std::isfinite(beta_start))
      throw InvalidArgument("AnnealSchedule: beta_start must be > 0");
    if (!(beta_end > beta_start) || !std::isfinite(beta_end))
      throw InvalidArgument("AnnealSchedule: beta_end must exceed beta_start");
  }

  /// Inverse temperature for sweep s in [0, sweeps).
  double beta(std::size_t s) const {
    if (sweeps == 1) return beta_end;
    const double t = static_cast<double>(s) / static_cast<double>(sweeps - 1);
    if (interpolation == Interpolation::linear) return beta_start + t * (beta_end - beta_start);
    return beta_start * std::pow(beta_end / beta_start, t);
  }
};

namespace sampler_detail {

using Clock = std::chrono::steady_clock;

inline double micros_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

/// Tie-aware ordering: energy, then nonzero before all-zero, then smaller k,
/// then lexicographically smaller bits.
inline bool sample_less(const Sample& a, const Sample& b) {
  if (a.energy != b.energy) return a.energy < b.energy;
  const bool az = a.mask.k() == 0, bz = b.mask.k() == 0;
  if (az != bz) return bz;
  if (a.mask.k() != b.mask.k()) return a.mask.k() < b.mask.k();
  return a.mask.bits() < b.mask.bits();
}

inline void sort_samples(std::vector<Sample>& s) { std::sort(s.begin(), s.end(), sample_less); }

/// Symmetric coupling matrix (zero diagonal) and linear terms of a model.
struct Couplings {
  std::size_t m = 0;
  std::vector<double> sym;  // row-major m x m
  std::vector<double> linear;
};

inline Couplings couplings(const QuadraticModel& model) {
  Couplings c;
  c.m = model.size();
  c.sym.assign(c.m * c.m, 0.0);
  c.linear.resize(c.m);
  const auto& mat = model.coefficients();
  for (std::size_t i = 0; i < c.m; ++i) {
    c.linear[i] = mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    for (std::size_t j = i + 1; j < c.m; ++j) {
      const double v = mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      c.sym[i * c.m + j] = v;
      c.sym[j * c.m + i] = v;
    }
  }
  return c;
}

/// exp(-x) for x in [0, 40) to about 1e-7 relative error: splits x*log2(e)
/// into integer and fractional parts and interpolates 2^-f from a table.
inline double exp_neg(double x) {
  constexpr int table_bits = 10;
  constexpr int table_size = 1 << table_bits;
  static const auto table = [] {
    std::array<double, table_size + 1> t{};
    for (int i = 0; i <= table_size; ++i) t[static_cast<std::size_t>(i)] = std::exp2(-static_cast<double>(i) / table_size);
    return t;
  }();
  static const auto powers = [] {
    std::array<double, 64> t{};
    for (int i = 0; i < 64; ++i) t[static_cast<std::size_t>(i)] = std::exp2(-static_cast<double>(i));
    return t;
  }();
  const double y = x * 1.4426950408889634;
  const int whole = static_cast<int>(y);
  const double frac = (y - whole) * table_size;
  const int idx = static_cast<int>(frac);
  const double w = frac - idx;
  const double v = table[static_cast<std::size_t>(idx)] * (1.0 - w) + table[static_cast<std::size_t>(idx) + 1] * w;
  return whole < 64 ? v * powers[static_cast<std::size_t>(whole)] : 0.0;
}

inline void add_row(double* __restrict field, const double* __restrict row, std::size_t m) {
  for (std::size_t j = 0; j < m; ++j) field[j] += row[j];
}

inline void sub_row(double* __restrict field, const double* __restrict row, std::size_t m) {
  for (std::size_t j = 0; j < m; ++j) field[j] -= row[j];
}

/// One annealing run. Each sweep visits every bit once with a single-flip
/// Metropolis proposal, then gives every selected bit one proposal to trade
/// places with a random unselected bit. Flips let the selection size drift;
/// exchanges move within a size shell without crossing the cardinality
/// penalty barrier. `state` holds the initial mask on entry and the final
/// mask on exit.
inline void anneal_shot(const Couplings& c, const std::vector<double>& betas, Engine& rng,
                        std::vector<std::uint8_t>& state) {
  const std::size_t m = c.m;
  // field[i]: energy change from switching bit i on, given the other bits.
  std::vector<double> field(c.linear);
  for (std::size_t i = 0; i < m; ++i)
    if (state[i])
      for (std::size_t j = 0; j < m; ++j) field[j] += c.sym[i * m + j];

  auto toggle = [&](std::size_t i) {
    if (state[i])
      sub_row(field.data(), &c.sym[i * m], m);
    else
      add_row(field.data(), &c.sym[i * m], m);
    state[i] ^= 1U;
  };
  constexpr double cutoff = 40.0;
  auto accept = [&](double beta, double delta) {
    if (delta <= 0.0) return true;
    const double x = beta * delta;
    return x < cutoff && uniform01(rng) < exp_neg(x);
  };

  std::vector<std::size_t> on, off;
  on.reserve(m);
  off.reserve(m);
  for (double beta : betas) {
    for (std::size_t i = 0; i < m; ++i) {
      const double delta = state[i] ? -field[i] : field[i];
      if (accept(beta, delta)) toggle(i);
    }

    on.clear();
    off.clear();
    for (std::size_t i = 0; i < m; ++i) (state[i] ? on : off).push_back(i);
    if (off.empty()) continue;
    for (const std::size_t a : on) {
      const std::size_t slot = static_cast<std::size_t>(rng() % off.size());
      const std::size_t b = off[slot];
      const double delta = field[b] - field[a] - c.sym[a * m + b];
      if (accept(beta, delta)) {
        toggle(a);
        toggle(b);
        off[slot] = a;
      }
    }
  }
}

/// Groups identical masks; `energy_of` supplies the exact energy per mask.
template <class EnergyFn>
std::vector<Sample> aggregate(const std::vector<std::vector<std::uint8_t>>& states, EnergyFn&& energy_of) {
  std::map<std::vector<std::uint8_t>, std::size_t> counts;
  for (const auto& s : states) ++counts[s];
  std::vector<Sample> out;
  out.reserve(counts.size());
  for (auto& [bits, n] : counts) {
    FeatureMask mask(bits);
    const double e = energy_of(mask);
    out.push_back({std::move(mask), e, n});
  }
  sort_samples(out);
  return out;
}

template <class EnergyFn>
SampleSet exhaustive(const QuadraticModel& model, EnergyFn&& energy_of) {
  const auto t0 = Clock::now();
  const std::size_t m = model.size();
  if (m > 24)
    throw SizeError("exhaustive_solve: " + std::to_string(m) + " variables exceeds the 24-variable limit");
  const auto c = couplings(model);
  const std::uint64_t total = std::uint64_t{1} << m;

  // Gray-code walk; each step flips one bit and updates energy incrementally.
  auto walk = [&](auto&& visit) {
    std::vector<double> field(c.linear);
    std::vector<std::uint8_t> state(m, 0);
    double e = model.offset();
    visit(std::uint64_t{0}, e);
    for (std::uint64_t step = 1; step < total; ++step) {
      const auto i = static_cast<std::size_t>(std::countr_zero(step));
      const double sign = state[i] ? -1.0 : 1.0;
      e += sign * field[i];
      state[i] ^= 1U;
      const double* row = &c.sym[i * m];
      for (std::size_t j = 0; j < m; ++j) field[j] += sign * row[j];
      visit(step ^ (step >> 1), e);
    }
  };

  double scale = std::abs(model.offset());
  for (Eigen::Index i = 0; i < model.coefficients().size(); ++i)
    scale += std::abs(model.coefficients().data()[i]);
  const double tol = 1e-9 * std::max(1.0, scale);

  double approx_min = std::numeric_limits<double>::infinity();
  walk([&](std::uint64_t, double e) { approx_min = std::min(approx_min, e); });

  std::vector<std::uint64_t> candidates;
  std::optional<double> runner_up;
  walk([&](std::uint64_t code, double e) {
    if (e <= approx_min + tol)
      candidates.push_back(code);
    else if (!runner_up || e < *runner_up)
      runner_up = e;
  });

  auto to_mask = [m](std::uint64_t code) {
    std::vector<std::uint8_t> bits(m);
    for (std::size_t i = 0; i < m; ++i) bits[i] = static_cast<std::uint8_t>((code >> i) & 1U);
    return FeatureMask(std::move(bits));
  };
  std::vector<Sample> exact;
  for (auto code : candidates) {
    auto mask = to_mask(code);
    const double e = energy_of(mask);
    exact.push_back({std::move(mask), e, 1});
  }
  sort_samples(exact);
  const double best = exact.front().energy;
  const double tie = 1e-12 * std::max(1.0, scale);
  std::vector<Sample> minima;
  for (auto& s : exact) {
    if (s.energy <= best + tie)
      minima.push_back(std::move(s));
    else if (!runner_up || s.energy < *runner_up)
      runner_up = s.energy;
  }

  SampleSet out;
  out.samples = std::move(minima);
  out.shots = out.samples.size();
  out.runner_up_energy = runner_up;
  out.solve_time_us = micros_since(t0);
  out.wall_time_us = out.solve_time_us;
  return out;
}

template <class EnergyFn>
SampleSet anneal(const QuadraticModel& model, double energy_scale, std::size_t shots,
                 const AnnealSchedule& schedule, std::uint64_t seed, EnergyFn&& energy_of) {
  const auto t_wall = Clock::now();
  schedule.validate();
  if (shots < 1) throw InvalidArgument("simulated_anneal: shots must be >= 1");
  const auto c = couplings(model);
  const double inv_scale = energy_scale > 0.0 ? 1.0 / energy_scale : 1.0;
  std::vector<double> betas(schedule.sweeps);
  for (std::size_t s = 0; s < schedule.sweeps; ++s) betas[s] = schedule.beta(s) * inv_scale;

  std::vector<std::vector<std::uint8_t>> states(shots);
  const auto t_solve = Clock::now();
  parallel_for(shots, [&](std::size_t shot) {
    Engine rng(derive_seed(seed, shot));
    auto& state = states[shot];
    state.resize(c.m);
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < c.m; ++i) {
      if (i % 64 == 0) bits = rng();
      state[i] = static_cast<std::uint8_t>(bits & 1U);
      bits >>= 1;
    }
    anneal_shot(c, betas, rng, state);
  });
  const double solve_us = micros_since(t_solve);

  SampleSet out;
  out.samples = aggregate(states, energy_of);
  out.shots = shots;
  out.solve_time_us = solve_us;
  out.wall_time_us = micros_since(t_wall);
  return out;
}

}  // namespace sampler_detail

/// Enumerates all 2^M masks and returns every global minimizer.
inline SampleSet exhaustive_solve(const QuboProblem& problem) {
  return sampler_detail::exhaustive(expand_penalized(problem),
                                    [&](const FeatureMask& w) { return energy(problem, w); });
}

inline SampleSet exhaustive_solve(const QuadraticModel& model) {
  return sampler_detail::exhaustive(model, [&](const FeatureMask& w) { return model.energy(w); });
}

/// Energy unit used to normalize the annealing schedule: the largest
/// absolute scaled objective coefficient alpha * |Q_ij|. The penalty is left
/// out so a large lambda does not wash out the objective at the cold end.
inline double anneal_energy_scale(const QuboProblem& problem) {
  const double s = problem.alpha * problem.q.matrix().cwiseAbs().maxCoeff();
  return s > 0.0 ? s : expand_penalized(problem).max_abs_coefficient();
}

/// Simulated annealing. Each shot starts from a random mask and follows
/// `schedule`, with inverse temperatures divided by anneal_energy_scale.
/// Shot s draws from its own stream derived from (seed, s), so results do
/// not depend on thread count.
inline SampleSet simulated_anneal(const QuboProblem& problem, std::size_t shots,
                                  const AnnealSchedule& schedule = {}, std::uint64_t seed = 0) {
  const auto t0 = sampler_detail::Clock::now();
  auto set = sampler_detail::anneal(expand_penalized(problem), anneal_energy_scale(problem), shots,
                                    schedule, seed,
                                    [&](const FeatureMask& w) { return energy(problem, w); });
  set.wall_time_us = sampler_detail::micros_since(t0);
  return set;
}

/// Generic-model variant; the schedule is normalized by the largest
/// absolute coefficient.
inline SampleSet simulated_anneal(const QuadraticModel& model, std::size_t shots,
                                  const AnnealSchedule& schedule = {}, std::uint64_t seed = 0) {
  return sampler_detail::anneal(model, model.max_abs_coefficient(), shots, schedule, seed,
                                [&](const FeatureMask& w) { return model.energy(w); });
}

/// Lowest-energy mask. Ties prefer a nonzero mask, then fewer selected
/// features, then the lexicographically smallest bit pattern.
inline FeatureMask best_mask(const SampleSet& set) {
  if (set.samples.empty()) throw InvalidArgument("best_mask: empty sample set");
  const auto it = std::min_element(set.samples.begin(), set.samples.end(), sampler_detail::sample_less);
  return it->mask;
}

/// Concatenates sample sets, merging duplicate masks. Times are summed.
inline SampleSet merge(const std::vector<SampleSet>& sets) {
  std::map<std::vector<std::uint8_t>, Sample> merged;
  SampleSet out;
  for (const auto& s : sets) {
    out.shots += s.shots;
    out.solve_time_us += s.solve_time_us;
    out.wall_time_us += s.wall_time_us;
    for (const auto& sample : s.samples) {
      auto [it, inserted] = merged.try_emplace(sample.mask.bits(), sample);
      if (!inserted) it->second.occurrences += sample.occurrences;
    }
  }
  for (auto& [_, s] : merged) out.samples.push_back(std::move(s));
  sampler_detail::sort_samples(out.samples);
  return out;
}

}  // namespace qafs

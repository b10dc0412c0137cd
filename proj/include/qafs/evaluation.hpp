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

// Benchmark orchestration: repeated train/test splits, every configured
// selector x metric x model combination, and report rendering.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "qafs/dataset.hpp"
#include "qafs/error.hpp"
#include "qafs/metrics.hpp"
#include "qafs/models.hpp"
#include "qafs/random.hpp"
#include "qafs/selection.hpp"

namespace qafs {

/// (hit + length) / 2 where hit = |S ∩ O| / |O| and
/// length = max(0, 1 - ||S| - |O|| / |O|). The clamp keeps long selections
/// from scoring below zero.
inline double subset_accuracy(const std::vector<std::size_t>& selected, const std::vector<std::size_t>& optimal) {
  const std::set<std::size_t> s(selected.begin(), selected.end());
  const std::set<std::size_t> o(optimal.begin(), optimal.end());
  if (o.empty()) throw InvalidArgument("subset_accuracy: optimal set is empty");
  std::size_t common = 0;
  for (auto i : s) common += o.count(i);
  const double no = static_cast<double>(o.size());
  const double hit = static_cast<double>(common) / no;
  const double diff = std::abs(static_cast<double>(s.size()) - no);
  const double length = std::max(0.0, 1.0 - diff / no);
  return (hit + length) / 2.0;
}

enum class SelectorKind { qubo, greedy, rfe, all };

inline SelectorKind parse_selector(std::string name) {
  for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (name == "qubo") return SelectorKind::qubo;
  if (name == "greedy" || name == "gr") return SelectorKind::greedy;
  if (name == "rfe") return SelectorKind::rfe;
  if (name == "all") return SelectorKind::all;
  throw InvalidArgument("unknown selector '" + name + "' (expected qubo, greedy, rfe or all)");
}

inline const char* selector_name(SelectorKind s) {
  switch (s) {
    case SelectorKind::qubo: return "qubo";
    case SelectorKind::greedy: return "greedy";
    case SelectorKind::rfe: return "rfe";
    case SelectorKind::all: return "all";
  }
  return "unknown";
}

struct FriedmanSource {
  std::size_t samples = 100;
  std::size_t features = 50;
  double noise = 1.0;
};

struct AutoSource {
  std::string path;
  MissingPolicy policy = MissingPolicy::drop_row_if_target_missing_impute_rest;
};

/// A dataset already in memory. `optimal`, when given, enables subset
/// accuracy scoring.
struct InlineSource {
  std::shared_ptr<const Dataset> data;
  std::vector<std::size_t> optimal;
};

struct ExperimentConfig {
  std::variant<FriedmanSource, AutoSource, InlineSource> source = FriedmanSource{};
  std::vector<MetricKind> metrics{MetricKind::pcc_metric()};
  std::vector<ModelKind> models{ModelKind::linear, ModelKind::gbr};
  std::vector<SelectorKind> selectors{SelectorKind::qubo, SelectorKind::greedy, SelectorKind::rfe,
                                      SelectorKind::all};
  double alpha = 1000.0;
  double lambda = 10.0;
  std::size_t k = 5;
  SamplerChoice sampler{};
  std::size_t bootstrap = 10;
  double train_fraction = 0.7;
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
  double greedy_fraction = 0.5;
  std::optional<std::size_t> rfe_target_k;  // default floor(M/2)
  GbrParams gbr{};

  void validate() const {
    if (metrics.empty()) throw InvalidArgument("config: at least one metric is required");
    if (models.empty()) throw InvalidArgument("config: at least one model is required");
    if (selectors.empty()) throw InvalidArgument("config: at least one selector is required");
    for (const auto& m : metrics) m.validate();
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("config: alpha must be > 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("config: lambda must be >= 0");
    if (k < 1) throw InvalidArgument("config: k must be >= 1");
    sampler.validate();
    if (bootstrap < 1) throw InvalidArgument("config: bootstrap must be >= 1");
    if (repeats < 1) throw InvalidArgument("config: repeats must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw InvalidArgument("config: train fraction must be in (0, 1)");
    if (!(greedy_fraction > 0.0 && greedy_fraction <= 1.0))
      throw InvalidArgument("config: greedy fraction must be in (0, 1]");
    if (rfe_target_k && *rfe_target_k < 1) throw InvalidArgument("config: rfe target k must be >= 1");
    gbr.validate();
    if (const auto* f = std::get_if<FriedmanSource>(&source)) {
      if (f->samples < 2) throw InvalidArgument("config: samples must be >= 2");
      if (f->features < 5) throw InvalidArgument("config: features must be >= 5");
      if (!(f->noise >= 0.0) || !std::isfinite(f->noise)) throw InvalidArgument("config: noise must be >= 0");
    } else if (const auto* a = std::get_if<AutoSource>(&source)) {
      if (a->path.empty()) throw InvalidArgument("config: auto benchmark needs a data path");
    } else if (!std::get<InlineSource>(source).data) {
      throw InvalidArgument("config: inline source has no dataset");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    if (const auto* f = std::get_if<FriedmanSource>(&source)) {
      j["dataset"] = "friedman";
      j["samples"] = f->samples;
      j["features"] = f->features;
      j["noise"] = f->noise;
    } else if (const auto* a = std::get_if<AutoSource>(&source)) {
      j["dataset"] = "auto";
      j["data"] = a->path;
      j["missing"] = a->policy == MissingPolicy::drop_any_missing ? "drop" : "impute";
    } else {
      j["dataset"] = "inline";
    }
    auto& ms = j["metric"] = nlohmann::json::array();
    for (const auto& m : metrics) ms.push_back(m.label());
    auto& mo = j["model"] = nlohmann::json::array();
    for (auto m : models) mo.push_back(model_label(m));
    auto& se = j["selector"] = nlohmann::json::array();
    for (auto s : selectors) se.push_back(selector_name(s));
    j["alpha"] = alpha;
    j["lambda"] = lambda;
    j["k"] = k;
    j["sampler"] = sampler_name(sampler.kind);
    if (sampler.kind == SamplerChoice::Kind::remote) {
      j["endpoint"] = sampler.endpoint;
      j["timeout_ms"] = sampler.timeout_ms;
      j["fallback"] = sampler.fallback_to_anneal;
    }
    j["shots"] = sampler.shots;
    j["sweeps"] = sampler.schedule.sweeps;
    j["bootstrap"] = bootstrap;
    j["train_fraction"] = train_fraction;
    j["repeats"] = repeats;
    j["seed"] = seed;
    j["greedy_fraction"] = greedy_fraction;
    if (rfe_target_k) j["rfe_k"] = *rfe_target_k;
    j["gbr"] = {{"n_trees", gbr.n_trees},
                {"max_depth", gbr.max_depth},
                {"learning_rate", gbr.learning_rate},
                {"min_samples_leaf", gbr.min_samples_leaf}};
    return j;
  }
};

struct RepeatResult {
  std::size_t repeat = 0;
  double mae = 0.0;
  std::vector<std::size_t> selected;
  std::optional<double> subset_accuracy;
  double select_time_us = 0.0;
  double wall_time_us = 0.0;
  std::vector<double> predictions;
  std::vector<double> truth;
  nlohmann::json selection_metadata = nlohmann::json::object();
};

struct ReportRow {
  std::string label;  // e.g. QPCC-LR, GR-GBR, All-LR
  SelectorKind selector = SelectorKind::all;
  std::string metric;  // empty for non-QUBO selectors
  ModelKind model = ModelKind::linear;
  bool failed = false;
  std::string error;
  std::vector<RepeatResult> repeats;

  double mae_mean = 0.0;
  double mae_std = 0.0;  // sample standard deviation over repeats
  double k_mean = 0.0;
  std::optional<double> sa_mean;
  std::optional<double> select_time_us;  // absent for the all-features baseline
  double wall_time_us = 0.0;

  void summarize() {
    const double n = static_cast<double>(repeats.size());
    if (repeats.empty()) return;
    mae_mean = k_mean = wall_time_us = 0.0;
    double sel = 0.0, sa = 0.0;
    bool have_sa = true;
    for (const auto& r : repeats) {
      mae_mean += r.mae;
      k_mean += static_cast<double>(r.selected.size());
      wall_time_us += r.wall_time_us;
      sel += r.select_time_us;
      if (r.subset_accuracy) sa += *r.subset_accuracy;
      else have_sa = false;
    }
    mae_mean /= n;
    k_mean /= n;
    wall_time_us /= n;
    double ss = 0.0;
    for (const auto& r : repeats) ss += (r.mae - mae_mean) * (r.mae - mae_mean);
    mae_std = repeats.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    sa_mean = have_sa ? std::optional<double>(sa / n) : std::nullopt;
    select_time_us = selector == SelectorKind::all ? std::nullopt : std::optional<double>(sel / n);
  }
};

struct ExperimentReport {
  nlohmann::json settings = nlohmann::json::object();
  std::size_t n_rows = 0;     // dataset rows after loading
  std::size_t n_features = 0; // M
  std::vector<ReportRow> rows;

  std::size_t failed_rows() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.failed; }));
  }
  const ReportRow* find(const std::string& label) const {
    for (const auto& r : rows)
      if (r.label == label) return &r;
    return nullptr;
  }
};

namespace evaluation_detail {

using Clock = std::chrono::steady_clock;

inline double micros_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

inline Dataset load(const ExperimentConfig& c) {
  if (const auto* f = std::get_if<FriedmanSource>(&c.source))
    return generate_friedman1(f->samples, f->features, f->noise, c.seed);
  if (const auto* a = std::get_if<AutoSource>(&c.source)) return load_auto_csv(a->path, a->policy);
  return *std::get<InlineSource>(c.source).data;
}

/// A selection computed once per repeat and shared by every row that uses
/// it; failures are shared the same way.
struct CachedSelection {
  std::optional<SelectionResult> result;
  std::string error;
  double wall_us = 0.0;
};

template <class Fn>
CachedSelection run_cached(Fn&& fn) {
  CachedSelection c;
  const auto t0 = Clock::now();
  try {
    c.result = fn();
  } catch (const std::exception& e) {
    c.error = e.what();
  }
  c.wall_us = micros_since(t0);
  return c;
}

}  // namespace evaluation_detail

/// Runs the benchmark. Data-loading errors throw; errors inside a single
/// selector/model combination mark only that row as failed.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Dataset data = evaluation_detail::load(config);
  const std::size_t m = data.cols();
  if (config.k > m && std::find(config.selectors.begin(), config.selectors.end(), SelectorKind::qubo) != config.selectors.end())
    throw InvalidArgument("config: k=" + std::to_string(config.k) + " exceeds the " + std::to_string(m) +
                          " available features");
  const std::size_t rfe_k = config.rfe_target_k.value_or(std::max<std::size_t>(1, m / 2));
  if (rfe_k > m) throw InvalidArgument("config: rfe target k exceeds the feature count");
  std::vector<std::size_t> optimal;
  if (std::holds_alternative<FriedmanSource>(config.source)) optimal = {0, 1, 2, 3, 4};
  if (const auto* in = std::get_if<InlineSource>(&config.source)) optimal = in->optimal;

  ExperimentReport report;
  report.settings = config.to_json();
  report.n_rows = data.rows();
  report.n_features = m;

  // Row layout, in config order.
  struct Key {
    SelectorKind selector;
    std::size_t metric;  // index into config.metrics (qubo only)
    ModelKind model;
  };
  std::vector<Key> keys;
  for (auto s : config.selectors) {
    if (s == SelectorKind::qubo) {
      for (std::size_t mi = 0; mi < config.metrics.size(); ++mi)
        for (auto mo : config.models) keys.push_back({s, mi, mo});
    } else {
      for (auto mo : config.models) keys.push_back({s, 0, mo});
    }
  }
  for (const auto& key : keys) {
    ReportRow row;
    row.selector = key.selector;
    row.model = key.model;
    switch (key.selector) {
      case SelectorKind::qubo:
        row.metric = config.metrics[key.metric].label();
        row.label = "Q" + row.metric;
        break;
      case SelectorKind::greedy: row.label = "GR"; break;
      case SelectorKind::rfe: row.label = "RFE"; break;
      case SelectorKind::all: row.label = "All"; break;
    }
    row.label += "-" + model_label(key.model);
    report.rows.push_back(std::move(row));
  }

  SplitPlan plan;
  plan.train_fraction = config.train_fraction;
  plan.n_repeats = config.repeats;
  plan.seed = derive_seed(config.seed, 1);
  const auto splits = split(data, plan);

  for (std::size_t r = 0; r < splits.size(); ++r) {
    const auto& sp = splits[r];
    std::map<std::pair<int, std::size_t>, evaluation_detail::CachedSelection> cache;
    auto selection_for = [&](const Key& key) -> const evaluation_detail::CachedSelection& {
      const auto id = std::make_pair(static_cast<int>(key.selector),
                                     key.selector == SelectorKind::qubo  ? key.metric
                                     : key.selector == SelectorKind::rfe ? static_cast<std::size_t>(key.model)
                                                                          : 0);
      auto it = cache.find(id);
      if (it != cache.end()) return it->second;
      auto sel = evaluation_detail::run_cached([&]() -> SelectionResult {
        switch (key.selector) {
          case SelectorKind::qubo:
            return qafs_select(sp.train, config.metrics[key.metric], config.alpha, config.lambda, config.k,
                               config.sampler, config.bootstrap, derive_seed(config.seed, 2 + r, key.metric));
          case SelectorKind::greedy:
            return greedy_ranked_select(sp.train, config.greedy_fraction);
          case SelectorKind::rfe:
            return rfe_select(sp.train, key.model, rfe_k, config.gbr);
          case SelectorKind::all:
            return all_features(sp.train);
        }
        throw InvalidArgument("unknown selector");
      });
      return cache.emplace(id, std::move(sel)).first->second;
    };

    for (std::size_t i = 0; i < keys.size(); ++i) {
      auto& row = report.rows[i];
      if (row.failed) continue;
      const auto& sel = selection_for(keys[i]);
      if (!sel.result) {
        row.failed = true;
        row.error = "repeat " + std::to_string(r) + ": " + sel.error;
        continue;
      }
      try {
        const auto t0 = evaluation_detail::Clock::now();
        const auto train = filter_columns(sp.train, sel.result->mask);
        const auto test = filter_columns(sp.test, sel.result->mask);
        const auto fitted = fit_model(keys[i].model, train.features(), train.target(), config.gbr);
        const Eigen::VectorXd pred = predict(fitted, test.features());
        RepeatResult rr;
        rr.repeat = r;
        rr.mae = mae(pred, test.target());
        rr.selected = sel.result->mask.indices();
        if (!optimal.empty()) rr.subset_accuracy = subset_accuracy(rr.selected, optimal);
        rr.select_time_us = sel.result->select_time_us;
        rr.wall_time_us = sel.wall_us + evaluation_detail::micros_since(t0);
        rr.predictions.assign(pred.data(), pred.data() + pred.size());
        rr.truth.assign(test.target().data(), test.target().data() + test.target().size());
        rr.selection_metadata = sel.result->metadata;
        row.repeats.push_back(std::move(rr));
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = "repeat " + std::to_string(r) + ": " + e.what();
      }
    }
  }
  for (auto& row : report.rows) {
    if (row.failed) row.repeats.clear();
    else row.summarize();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Rendering

enum class ReportFormat { markdown, csv, json };

inline ReportFormat parse_format(const std::string& name) {
  if (name == "md" || name == "markdown") return ReportFormat::markdown;
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw InvalidArgument("unknown output format '" + name + "' (expected md, csv or json)");
}

struct RenderOptions {
  /// Wall-clock fields differ between otherwise identical runs, so they are
  /// only written on request.
  bool timing = false;
};

namespace evaluation_detail {

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string md_cell(std::string s) {
  for (auto& c : s)
    if (c == '|' || c == '\n') c = ' ';
  return s;
}

}  // namespace evaluation_detail

inline std::string render_report(const ExperimentReport& report, ReportFormat format, const RenderOptions& opt = {}) {
  using evaluation_detail::fixed;
  std::ostringstream os;
  switch (format) {
    case ReportFormat::markdown: {
      os << "| FS method | MAE | k | SA |";
      if (opt.timing) os << " select time (us) | wall time (us) |";
      os << "\n|---|---|---|---|";
      if (opt.timing) os << "---|---|";
      os << "\n";
      for (const auto& r : report.rows) {
        if (r.failed) {
          os << "| " << r.label << " | failed: " << evaluation_detail::md_cell(r.error) << " | - | - |";
          if (opt.timing) os << " - | - |";
          os << "\n";
          continue;
        }
        os << "| " << r.label << " | " << fixed(r.mae_mean, 2) << " ± " << fixed(r.mae_std, 2) << " | "
           << fixed(r.k_mean, 1) << " | " << (r.sa_mean ? fixed(*r.sa_mean, 2) : "-") << " |";
        if (opt.timing)
          os << " " << (r.select_time_us ? fixed(*r.select_time_us, 0) : "-") << " | " << fixed(r.wall_time_us, 0)
             << " |";
        os << "\n";
      }
      break;
    }
    case ReportFormat::csv: {
      os << "method,status,mae_mean,mae_std,k_mean,sa_mean";
      if (opt.timing) os << ",select_time_us,wall_time_us";
      os << ",error\n";
      for (const auto& r : report.rows) {
        os << evaluation_detail::csv_field(r.label) << ',';
        if (r.failed) {
          os << "failed,,,,";
          if (opt.timing) os << ",,";
          os << "," << evaluation_detail::csv_field(r.error) << "\n";
          continue;
        }
        os << "ok," << fixed(r.mae_mean, 2) << ',' << fixed(r.mae_std, 2) << ',' << fixed(r.k_mean, 1) << ','
           << (r.sa_mean ? fixed(*r.sa_mean, 2) : "");
        if (opt.timing)
          os << ',' << (r.select_time_us ? fixed(*r.select_time_us, 0) : "") << ',' << fixed(r.wall_time_us, 0);
        os << ",\n";
      }
      break;
    }
    case ReportFormat::json: {
      nlohmann::json j;
      j["settings"] = report.settings;
      j["n_rows"] = report.n_rows;
      j["n_features"] = report.n_features;
      auto& rows = j["rows"] = nlohmann::json::array();
      for (const auto& r : report.rows) {
        nlohmann::json row{{"label", r.label},
                           {"selector", selector_name(r.selector)},
                           {"model", model_label(r.model)},
                           {"status", r.failed ? "failed" : "ok"}};
        if (!r.metric.empty()) row["metric"] = r.metric;
        if (r.failed) {
          row["error"] = r.error;
          rows.push_back(std::move(row));
          continue;
        }
        row["mae_mean"] = r.mae_mean;
        row["mae_std"] = r.mae_std;
        row["k_mean"] = r.k_mean;
        row["sa_mean"] = r.sa_mean ? nlohmann::json(*r.sa_mean) : nlohmann::json(nullptr);
        if (opt.timing) {
          row["select_time_us"] = r.select_time_us ? nlohmann::json(*r.select_time_us) : nlohmann::json(nullptr);
          row["wall_time_us"] = r.wall_time_us;
        }
        auto& reps = row["repeats"] = nlohmann::json::array();
        for (const auto& rr : r.repeats) {
          nlohmann::json e{{"repeat", rr.repeat},
                           {"mae", rr.mae},
                           {"k", rr.selected.size()},
                           {"selected", rr.selected},
                           {"sa", rr.subset_accuracy ? nlohmann::json(*rr.subset_accuracy) : nlohmann::json(nullptr)},
                           {"selection", rr.selection_metadata},
                           {"predictions", rr.predictions},
                           {"truth", rr.truth}};
          if (opt.timing) {
            e["select_time_us"] = rr.select_time_us;
            e["wall_time_us"] = rr.wall_time_us;
          }
          reps.push_back(std::move(e));
        }
        rows.push_back(std::move(row));
      }
      os << j.dump(2) << "\n";
      break;
    }
  }
  return os.str();
}

}  // namespace qafs

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

// Command-line front end. Values resolve as defaults < --config JSON file <
// explicit flags, and the result is validated before any work starts.
//
//   qafs bench friedman [flags]
//   qafs bench auto --data PATH [flags]
//   qafs solve --qubo PATH.json --sampler sa|exhaustive|remote [flags]
//
// Exit codes: 0 ok, 1 configuration error, 2 data error, 3 all rows failed
// (or, for solve, the sampler failed).

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qafs/error.hpp"
#include "qafs/evaluation.hpp"
#include "qafs/remote.hpp"
#include "qafs/samplers.hpp"
#include "qafs/selection.hpp"

#ifndef QAFS_VERSION
#define QAFS_VERSION "0.1.0"
#endif

namespace qafs::cli {

enum ExitCode : int { ok = 0, config_error = 1, data_error = 2, all_failed = 3 };

/// Carries an exit code and the text to print with it.
struct CliExit {
  int code;
  std::string message;
  bool to_stdout = false;
};

struct SolveOptions {
  std::string qubo_path;
  SamplerChoice sampler{};
  std::uint64_t seed = 0;
};

struct CliInvocation {
  std::string subcommand;  // "bench friedman", "bench auto" or "solve"
  ExperimentConfig config{};
  ReportFormat format = ReportFormat::markdown;
  std::string out_path;
  RenderOptions render{};
  SolveOptions solve{};
};

namespace detail {

using nlohmann::json;

inline std::string text(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw InvalidArgument(key + ": expected a string");
}

inline double real(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  const auto s = text(v, key);
  double out = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw InvalidArgument(key + ": '" + s + "' is not a number");
  return out;
}

inline std::uint64_t whole(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) throw InvalidArgument(key + ": must be non-negative");
    return v.get<std::uint64_t>();
  }
  if (v.is_number_float()) throw InvalidArgument(key + ": must be an integer");
  const auto s = text(v, key);
  if (!s.empty() && s[0] == '-') throw InvalidArgument(key + ": must be non-negative (got " + s + ")");
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw InvalidArgument(key + ": '" + s + "' is not a non-negative integer");
  return out;
}

inline bool boolean(const json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  const auto s = text(v, key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw InvalidArgument(key + ": expected true or false");
}

inline std::vector<std::string> list(const json& v, const std::string& key) {
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(text(e, key));
  } else {
    std::stringstream ss(text(v, key));
    for (std::string item; std::getline(ss, item, ',');)
      if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw InvalidArgument(key + ": empty list");
  return out;
}

using Setter = std::function<void(CliInvocation&, const json&)>;

/// One table for both config-file keys and flags (flag = "--" + key with
/// '_' written as '-').
inline const std::map<std::string, Setter>& bench_setters() {
  static const std::map<std::string, Setter> table = {
      {"samples", [](CliInvocation& c, const json& v) {
         std::get<FriedmanSource>(c.config.source).samples = whole(v, "samples"); }},
      {"features", [](CliInvocation& c, const json& v) {
         std::get<FriedmanSource>(c.config.source).features = whole(v, "features"); }},
      {"noise", [](CliInvocation& c, const json& v) {
         std::get<FriedmanSource>(c.config.source).noise = real(v, "noise"); }},
      {"data", [](CliInvocation& c, const json& v) { std::get<AutoSource>(c.config.source).path = text(v, "data"); }},
      {"missing", [](CliInvocation& c, const json& v) {
         const auto s = text(v, "missing");
         auto& p = std::get<AutoSource>(c.config.source).policy;
         if (s == "impute") p = MissingPolicy::drop_row_if_target_missing_impute_rest;
         else if (s == "drop") p = MissingPolicy::drop_any_missing;
         else throw InvalidArgument("missing: expected impute or drop (got '" + s + "')"); }},
      {"metric", [](CliInvocation& c, const json& v) {
         c.config.metrics.clear();
         for (const auto& s : list(v, "metric")) c.config.metrics.push_back(parse_metric(s)); }},
      {"model", [](CliInvocation& c, const json& v) {
         c.config.models.clear();
         for (const auto& s : list(v, "model")) c.config.models.push_back(parse_model(s)); }},
      {"selector", [](CliInvocation& c, const json& v) {
         c.config.selectors.clear();
         for (const auto& s : list(v, "selector")) c.config.selectors.push_back(parse_selector(s)); }},
      {"alpha", [](CliInvocation& c, const json& v) { c.config.alpha = real(v, "alpha"); }},
      {"lambda", [](CliInvocation& c, const json& v) { c.config.lambda = real(v, "lambda"); }},
      {"k", [](CliInvocation& c, const json& v) { c.config.k = whole(v, "k"); }},
      {"sampler", [](CliInvocation& c, const json& v) { c.config.sampler.kind = parse_sampler(text(v, "sampler")); }},
      {"endpoint", [](CliInvocation& c, const json& v) { c.config.sampler.endpoint = text(v, "endpoint"); }},
      {"timeout_ms", [](CliInvocation& c, const json& v) {
         const auto t = whole(v, "timeout_ms");
         if (t < 1 || t > 3600000) throw InvalidArgument("timeout_ms: must be in [1, 3600000]");
         c.config.sampler.timeout_ms = static_cast<int>(t); }},
      {"fallback", [](CliInvocation& c, const json& v) { c.config.sampler.fallback_to_anneal = boolean(v, "fallback"); }},
      {"shots", [](CliInvocation& c, const json& v) { c.config.sampler.shots = whole(v, "shots"); }},
      {"sweeps", [](CliInvocation& c, const json& v) { c.config.sampler.schedule.sweeps = whole(v, "sweeps"); }},
      {"bootstrap", [](CliInvocation& c, const json& v) { c.config.bootstrap = whole(v, "bootstrap"); }},
      {"repeats", [](CliInvocation& c, const json& v) { c.config.repeats = whole(v, "repeats"); }},
      {"seed", [](CliInvocation& c, const json& v) { c.config.seed = whole(v, "seed"); }},
      {"train_fraction", [](CliInvocation& c, const json& v) { c.config.train_fraction = real(v, "train_fraction"); }},
      {"greedy_fraction", [](CliInvocation& c, const json& v) { c.config.greedy_fraction = real(v, "greedy_fraction"); }},
      {"rfe_k", [](CliInvocation& c, const json& v) { c.config.rfe_target_k = whole(v, "rfe_k"); }},
      {"output", [](CliInvocation& c, const json& v) { c.format = parse_format(text(v, "output")); }},
      {"out", [](CliInvocation& c, const json& v) { c.out_path = text(v, "out"); }},
      {"timing", [](CliInvocation& c, const json& v) { c.render.timing = boolean(v, "timing"); }},
  };
  return table;
}

inline void apply_gbr(CliInvocation& c, const json& v) {
  if (!v.is_object()) throw InvalidArgument("gbr: expected an object");
  for (const auto& [key, val] : v.items()) {
    if (key == "n_trees") c.config.gbr.n_trees = static_cast<int>(whole(val, "gbr.n_trees"));
    else if (key == "max_depth") c.config.gbr.max_depth = static_cast<int>(whole(val, "gbr.max_depth"));
    else if (key == "learning_rate") c.config.gbr.learning_rate = real(val, "gbr.learning_rate");
    else if (key == "min_samples_leaf") c.config.gbr.min_samples_leaf = static_cast<int>(whole(val, "gbr.min_samples_leaf"));
    else throw InvalidArgument("config: unknown key 'gbr." + key + "'");
  }
}

inline std::string flag_of(std::string key) {
  for (auto& ch : key)
    if (ch == '_') ch = '-';
  return "--" + key;
}

inline json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("--config: cannot open '" + path + "'");
  try {
    auto j = json::parse(in);
    if (!j.is_object()) throw InvalidArgument("--config: '" + path + "' must hold a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw InvalidArgument("--config: '" + path + "' is not valid JSON (" + e.what() + ")");
  }
}

struct BenchFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
  bool fallback = false;
  bool timing = false;
};

inline const std::map<std::string, std::string>& flag_help() {
  static const std::map<std::string, std::string> help = {
      {"samples", "rows to generate (default 100)"},
      {"features", "columns to generate, at least 5 (default 50)"},
      {"noise", "standard deviation of the additive noise (default 1.0)"},
      {"data", "path to the imports-85 data file"},
      {"missing", "missing-value policy: impute (default) or drop"},
      {"metric", "comma list of pcc,mi,mic,gmic (default pcc)"},
      {"model", "comma list of lr,gbr (default lr,gbr)"},
      {"selector", "comma list of qubo,greedy,rfe,all (default all four)"},
      {"alpha", "objective scale alpha (default 1000)"},
      {"lambda", "cardinality penalty lambda (default 10)"},
      {"k", "target number of features in the penalty (default 5)"},
      {"sampler", "sa, exhaustive or remote (default sa)"},
      {"endpoint", "remote sampler URL, http://host:port/path"},
      {"timeout_ms", "remote request timeout in milliseconds (default 30000)"},
      {"fallback", "fall back to simulated annealing when the remote sampler fails"},
      {"shots", "reads per sampler query (default 10000)"},
      {"sweeps", "annealing sweeps per shot (default 200)"},
      {"bootstrap", "sampler queries per selection (default 10)"},
      {"repeats", "train/test split repeats (default 3)"},
      {"seed", "master seed (default 0)"},
      {"train_fraction", "training share of each split (default 0.7)"},
      {"greedy_fraction", "share of columns kept by greedy ranking (default 0.5)"},
      {"rfe_k", "features kept by recursive elimination (default floor(M/2))"},
      {"output", "md, csv or json (default md)"},
      {"out", "write the report here instead of stdout"},
      {"timing", "include wall-clock timing fields in the report"},
  };
  return help;
}

inline void add_bench_flags(CLI::App& app, BenchFlags& f, bool friedman) {
  for (const auto& [key, help] : flag_help()) {
    if (friedman && (key == "data" || key == "missing")) continue;
    if (!friedman && (key == "samples" || key == "features" || key == "noise")) continue;
    CLI::Option* opt = nullptr;
    if (key == "fallback") opt = app.add_flag(flag_of(key), f.fallback, help);
    else if (key == "timing") opt = app.add_flag(flag_of(key), f.timing, help);
    else opt = app.add_option(flag_of(key), f.values[key], help)
                   ->type_name(key == "metric" || key == "model" || key == "selector" ? "LIST"
                               : key == "data" || key == "out"                        ? "PATH"
                                                                                      : "VALUE");
    f.options[key] = opt;
  }
  if (!friedman) f.options["data"]->required();
  app.add_option("--config", f.config_path, "JSON file with any of the keys above (flags win)")->type_name("PATH");
}

inline CliInvocation resolve_bench(const std::string& which, const BenchFlags& f) {
  CliInvocation inv;
  inv.subcommand = "bench " + which;
  if (which == "auto") inv.config.source = AutoSource{};
  const auto& setters = bench_setters();
  const bool friedman = which == "friedman";

  if (!f.config_path.empty()) {
    const auto cfg = read_config(f.config_path);
    for (const auto& [key, v] : cfg.items()) {
      if (key == "dataset") {
        if (text(v, key) != which)
          throw InvalidArgument("--config: dataset '" + text(v, key) + "' does not match 'bench " + which + "'");
        continue;
      }
      if (key == "gbr") {
        apply_gbr(inv, v);
        continue;
      }
      const auto it = setters.find(key);
      const bool wrong_source = friedman ? (key == "data" || key == "missing")
                                         : (key == "samples" || key == "features" || key == "noise");
      if (it == setters.end() || wrong_source)
        throw InvalidArgument("--config: unknown key '" + key + "' for bench " + which);
      it->second(inv, v);
    }
  }
  for (const auto& [key, opt] : f.options) {
    if (opt->count() == 0) continue;
    if (key == "fallback") setters.at(key)(inv, json(f.fallback));
    else if (key == "timing") setters.at(key)(inv, json(f.timing));
    else setters.at(key)(inv, json(f.values.at(key)));
  }
  if (inv.config.sampler.kind == SamplerChoice::Kind::remote && inv.config.sampler.endpoint.empty())
    throw InvalidArgument("--sampler remote requires --endpoint");
  inv.config.validate();
  return inv;
}

}  // namespace detail

/// Parses argv into a resolved invocation. Throws CliExit for help,
/// version and every usage or validation problem (code 1).
inline CliInvocation parse_and_validate(std::vector<std::string> args) {
  CLI::App app{"Feature-subset selection through QUBO sampling, with benchmark baselines", "qafs"};
  app.set_version_flag("--version", std::string("qafs ") + QAFS_VERSION);
  app.require_subcommand(1);
  auto* bench = app.add_subcommand("bench", "run a benchmark");
  bench->require_subcommand(1);
  bench->set_version_flag("--version", std::string("qafs ") + QAFS_VERSION);
  auto* friedman = bench->add_subcommand("friedman", "Friedman #1 synthetic data (optimal set: first five columns)");
  auto* autos = bench->add_subcommand("auto", "UCI Automobile imports-85 price data");
  detail::BenchFlags ff, af;
  detail::add_bench_flags(*friedman, ff, true);
  detail::add_bench_flags(*autos, af, false);

  auto* solve = app.add_subcommand("solve", "solve one QUBO given in the wire request format");
  std::string qubo_path, sampler = "sa", endpoint;
  std::uint64_t shots = 10000, seed = 0, sweeps = AnnealSchedule{}.sweeps, timeout_ms = 30000;
  solve->add_option("--qubo", qubo_path, "JSON file: {\"linear\": ..., \"quadratic\": ..., \"offset\": ...}")->required();
  solve->add_option("--sampler", sampler, "sa, exhaustive or remote (default sa)");
  auto* endpoint_opt = solve->add_option("--endpoint", endpoint, "remote sampler URL");
  solve->add_option("--shots", shots, "reads (default 10000)");
  solve->add_option("--seed", seed, "seed (default 0)");
  solve->add_option("--sweeps", sweeps, "annealing sweeps per shot (default 200)");
  solve->add_option("--timeout-ms", timeout_ms, "remote request timeout in milliseconds (default 30000)");

  for (auto* sub : {friedman, autos, solve}) sub->set_version_flag("--version", std::string("qafs ") + QAFS_VERSION);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    // Print help for the deepest subcommand that was named.
    const CLI::App* target = &app;
    for (bool descended = true; descended;) {
      descended = false;
      for (const auto* sub : target->get_subcommands()) {
        target = sub;
        descended = true;
        break;
      }
    }
    throw CliExit{ok, target->help(), true};
  } catch (const CLI::CallForVersion&) {
    throw CliExit{ok, std::string("qafs ") + QAFS_VERSION + "\n", true};
  } catch (const CLI::ParseError& e) {
    const CLI::App* target = &app;
    for (bool descended = true; descended;) {
      descended = false;
      for (const auto* sub : target->get_subcommands()) {
        target = sub;
        descended = true;
        break;
      }
    }
    throw CliExit{config_error, std::string("error: ") + e.what() + "\n\n" + target->help()};
  }

  try {
    if (*friedman) return detail::resolve_bench("friedman", ff);
    if (*autos) return detail::resolve_bench("auto", af);
    CliInvocation inv;
    inv.subcommand = "solve";
    inv.solve.qubo_path = qubo_path;
    inv.solve.sampler.kind = parse_sampler(sampler);
    inv.solve.sampler.endpoint = endpoint;
    inv.solve.sampler.shots = shots;
    inv.solve.sampler.schedule.sweeps = sweeps;
    if (timeout_ms < 1 || timeout_ms > 3600000) throw InvalidArgument("--timeout-ms must be in [1, 3600000]");
    inv.solve.sampler.timeout_ms = static_cast<int>(timeout_ms);
    inv.solve.seed = seed;
    if (inv.solve.sampler.kind == SamplerChoice::Kind::remote && endpoint_opt->count() == 0)
      throw InvalidArgument("--sampler remote requires --endpoint");
    inv.solve.sampler.validate();
    return inv;
  } catch (const std::exception& e) {
    throw CliExit{config_error, std::string("error: ") + e.what() + "\n"};
  }
}

namespace detail {

inline int run_solve(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  QuadraticModel model = [&] {
    std::ifstream in(inv.solve.qubo_path);
    if (!in) throw LoadError(inv.solve.qubo_path + ": cannot open file");
    try {
      return from_wire_request(json::parse(in));
    } catch (const json::exception& e) {
      throw LoadError(inv.solve.qubo_path + ": invalid JSON (" + e.what() + ")");
    } catch (const InvalidArgument& e) {
      throw LoadError(inv.solve.qubo_path + ": " + e.what());
    }
  }();
  const auto& s = inv.solve.sampler;
  SampleSet set;
  try {
    switch (s.kind) {
      case SamplerChoice::Kind::exhaustive: set = exhaustive_solve(model); break;
      case SamplerChoice::Kind::simulated_annealing: set = simulated_anneal(model, s.shots, s.schedule, inv.solve.seed); break;
      case SamplerChoice::Kind::remote: set = remote_sample(model, s.endpoint, s.shots, s.timeout_ms); break;
    }
  } catch (const SizeError& e) {
    err << "error: " << e.what() << "\n";
    return config_error;
  } catch (const RemoteError& e) {
    err << "error: remote sampler failed (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return all_failed;
  }
  const auto best = best_mask(set);
  const auto it = std::find_if(set.samples.begin(), set.samples.end(), [&](const Sample& x) { return x.mask == best; });
  out << "mask: " << best.to_string() << "\n"
      << "selected: [";
  const auto idx = best.indices();
  for (std::size_t i = 0; i < idx.size(); ++i) out << (i ? ", " : "") << idx[i];
  out << "]\nenergy: " << it->energy << "\n"
      << "shots: " << set.shots << "\n"
      << "solve_time_us: " << set.solve_time_us << "\n"
      << "wall_time_us: " << set.wall_time_us << "\n";
  return ok;
}

inline int run_bench(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  const auto report = run_experiment(inv.config);
  const auto text = render_report(report, inv.format, inv.render);
  if (inv.out_path.empty()) {
    out << text;
  } else {
    std::ofstream f(inv.out_path, std::ios::binary);
    if (!f || !(f << text)) {
      err << "error: cannot write '" << inv.out_path << "'\n";
      return data_error;
    }
  }
  for (const auto& r : report.rows)
    if (r.failed) err << "warning: " << r.label << " failed: " << r.error << "\n";
  if (!report.rows.empty() && report.failed_rows() == report.rows.size()) {
    err << "error: every row failed\n";
    return all_failed;
  }
  return ok;
}

}  // namespace detail

inline int main(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CliInvocation inv;
  try {
    inv = parse_and_validate(args);
  } catch (const CliExit& e) {
    (e.to_stdout ? out : err) << e.message;
    return e.code;
  }
  try {
    return inv.subcommand == "solve" ? detail::run_solve(inv, out, err) : detail::run_bench(inv, out, err);
  } catch (const LoadError& e) {
    err << "error: " << e.what() << "\n";
    return data_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return config_error;
  }
}

}  // namespace qafs::cli

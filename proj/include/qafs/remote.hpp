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

// Client for an annealer-style sampling service.
//
// Request (HTTP POST, application/json):
//   {"linear": {"0": c00, ...}, "quadratic": {"0,1": c01, ...},
//    "num_reads": shots, "offset": constant}
// Response:
//   {"samples": [[0,1,...], ...], "energies": [...],
//    "num_occurrences": [...], "timing": {"qpu_access_time_us": t}}
//
// Returned energies are never trusted; each one is recomputed locally.

// Eigen first: resolver headers pulled in by httplib define _res.
#include <Eigen/Dense>
#include <httplib.h>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <tuple>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qafs/error.hpp"
#include "qafs/qubo.hpp"
#include "qafs/samplers.hpp"

namespace qafs {

class RemoteError : public std::runtime_error {
 public:
  enum class Kind { network, timeout, malformed_response, energy_mismatch };

  RemoteError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline const char* to_string(RemoteError::Kind k) {
  switch (k) {
    case RemoteError::Kind::network: return "network";
    case RemoteError::Kind::timeout: return "timeout";
    case RemoteError::Kind::malformed_response: return "malformed-response";
    case RemoteError::Kind::energy_mismatch: return "energy-mismatch";
  }
  return "unknown";
}

/// http://host[:port][/path]
struct Endpoint {
  std::string host;
  int port = 80;
  std::string path = "/";
};

inline Endpoint parse_endpoint(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (url.substr(0, scheme.size()) != scheme)
    throw InvalidArgument("endpoint must start with http:// (got '" + std::string(url) + "')");
  url.remove_prefix(scheme.size());
  Endpoint ep;
  const auto slash = url.find('/');
  std::string_view authority = url.substr(0, slash);
  if (slash != std::string_view::npos) ep.path = std::string(url.substr(slash));
  const auto colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    const auto port_text = authority.substr(colon + 1);
    int port = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port < 1 || port > 65535)
      throw InvalidArgument("endpoint has an invalid port: '" + std::string(port_text) + "'");
    ep.port = port;
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) throw InvalidArgument("endpoint has no host");
  ep.host = std::string(authority);
  return ep;
}

using json = nlohmann::json;

inline json to_wire_request(const QuadraticModel& model, std::size_t shots) {
  json linear = json::object();
  json quadratic = json::object();
  const auto& c = model.coefficients();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    linear[std::to_string(i)] = c(i, i);
    for (Eigen::Index j = i + 1; j < c.cols(); ++j)
      if (c(i, j) != 0.0) quadratic[std::to_string(i) + "," + std::to_string(j)] = c(i, j);
  }
  return {{"linear", std::move(linear)},
          {"quadratic", std::move(quadratic)},
          {"num_reads", shots},
          {"offset", model.offset()}};
}

namespace remote_detail {

inline std::size_t parse_index(std::string_view s, const std::string& key) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidArgument("wire request: bad variable key '" + key + "'");
  return v;
}

inline double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw InvalidArgument("wire request: " + what + " is not a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw InvalidArgument("wire request: " + what + " is not finite");
  return d;
}

}  // namespace remote_detail

/// Reads the request shape back into a model. `shots` receives num_reads
/// when present.
inline QuadraticModel from_wire_request(const json& req, std::size_t* shots = nullptr) {
  if (!req.is_object() || !req.contains("linear") || !req["linear"].is_object())
    throw InvalidArgument("wire request: missing object field 'linear'");
  const json empty = json::object();
  const json& quad = req.contains("quadratic") ? req["quadratic"] : empty;
  if (!quad.is_object()) throw InvalidArgument("wire request: 'quadratic' must be an object");

  std::size_t m = 0;
  std::vector<std::pair<std::size_t, double>> lin;
  for (const auto& [key, v] : req["linear"].items()) {
    const auto i = remote_detail::parse_index(key, key);
    lin.emplace_back(i, remote_detail::number(v, "linear[" + key + "]"));
    m = std::max(m, i + 1);
  }
  std::vector<std::tuple<std::size_t, std::size_t, double>> pairs;
  for (const auto& [key, v] : quad.items()) {
    const auto comma = key.find(',');
    if (comma == std::string::npos) throw InvalidArgument("wire request: quadratic key '" + key + "' needs 'i,j'");
    const auto i = remote_detail::parse_index(std::string_view(key).substr(0, comma), key);
    const auto j = remote_detail::parse_index(std::string_view(key).substr(comma + 1), key);
    if (!(i < j)) throw InvalidArgument("wire request: quadratic key '" + key + "' must satisfy i < j");
    pairs.emplace_back(i, j, remote_detail::number(v, "quadratic[" + key + "]"));
    m = std::max(m, j + 1);
  }
  if (m == 0) throw InvalidArgument("wire request: no variables");
  if (m > 4096) throw InvalidArgument("wire request: too many variables");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (auto [i, v] : lin) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = v;
  for (auto [i, j, v] : pairs) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
  double offset = 0.0;
  if (req.contains("offset")) offset = remote_detail::number(req["offset"], "offset");
  if (req.contains("num_reads")) {
    const auto& n = req["num_reads"];
    if (!n.is_number_integer() || n.get<std::int64_t>() < 1)
      throw InvalidArgument("wire request: num_reads must be a positive integer");
    if (shots) *shots = n.get<std::size_t>();
  }
  return QuadraticModel(std::move(c), offset);
}

/// Builds the response body for a sample set (used by servers and stubs).
inline json to_wire_response(const SampleSet& set) {
  json samples = json::array(), energies = json::array(), occ = json::array();
  for (const auto& s : set.samples) {
    json bits = json::array();
    for (auto b : s.mask.bits()) bits.push_back(static_cast<int>(b));
    samples.push_back(std::move(bits));
    energies.push_back(s.energy);
    occ.push_back(s.occurrences);
  }
  return {{"samples", std::move(samples)},
          {"energies", std::move(energies)},
          {"num_occurrences", std::move(occ)},
          {"timing", {{"qpu_access_time_us", set.solve_time_us}}}};
}

namespace remote_detail {

[[noreturn]] inline void malformed(const std::string& why) {
  throw RemoteError(RemoteError::Kind::malformed_response, "remote sampler: malformed response: " + why);
}

template <class EnergyFn>
SampleSet parse_response(const std::string& body, std::size_t m, EnergyFn&& energy_of) {
  json resp;
  try {
    resp = json::parse(body);
  } catch (const json::exception& e) {
    malformed(std::string("invalid JSON (") + e.what() + ")");
  }
  if (!resp.is_object()) malformed("top level is not an object");
  for (const char* field : {"samples", "energies", "num_occurrences"})
    if (!resp.contains(field) || !resp[field].is_array()) malformed(std::string("missing array '") + field + "'");
  if (!resp.contains("timing") || !resp["timing"].is_object() ||
      !resp["timing"].contains("qpu_access_time_us") || !resp["timing"]["qpu_access_time_us"].is_number())
    malformed("missing timing.qpu_access_time_us");
  const auto& samples = resp["samples"];
  const auto& energies = resp["energies"];
  const auto& occ = resp["num_occurrences"];
  if (samples.size() != energies.size() || samples.size() != occ.size())
    malformed("samples, energies and num_occurrences differ in length");
  if (samples.empty()) malformed("no samples");

  SampleSet out;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& row = samples[s];
    if (!row.is_array() || row.size() != m)
      malformed("sample " + std::to_string(s) + " does not have " + std::to_string(m) + " entries");
    std::vector<std::uint8_t> bits(m);
    for (std::size_t i = 0; i < m; ++i) {
      if (!row[i].is_number_integer() || (row[i].get<int>() != 0 && row[i].get<int>() != 1))
        malformed("sample " + std::to_string(s) + " has a non-binary entry");
      bits[i] = static_cast<std::uint8_t>(row[i].get<int>());
    }
    if (!energies[s].is_number()) malformed("energy " + std::to_string(s) + " is not a number");
    if (!occ[s].is_number_integer() || occ[s].get<std::int64_t>() < 1)
      malformed("num_occurrences " + std::to_string(s) + " is not a positive integer");
    FeatureMask mask(std::move(bits));
    const double reported = energies[s].get<double>();
    const double local = energy_of(mask);
    if (!(std::abs(reported - local) <= 1e-6 * std::max(1.0, std::abs(local))))
      throw RemoteError(RemoteError::Kind::energy_mismatch,
                        "remote sampler: sample " + std::to_string(s) + " reports energy " +
                            std::to_string(reported) + " but recomputes to " + std::to_string(local));
    const auto n = occ[s].get<std::size_t>();
    out.samples.push_back({std::move(mask), local, n});
    out.shots += n;
  }
  out.solve_time_us = resp["timing"]["qpu_access_time_us"].get<double>();
  out = merge({out});
  return out;
}

template <class EnergyFn>
SampleSet post(const QuadraticModel& model, const std::string& endpoint, std::size_t shots,
               int timeout_ms, EnergyFn&& energy_of) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  if (shots < 1) throw InvalidArgument("remote_sample: shots must be >= 1");
  if (timeout_ms < 1) throw InvalidArgument("remote_sample: timeout_ms must be >= 1");
  const auto ep = parse_endpoint(endpoint);
  const auto body = to_wire_request(model, shots).dump();

  httplib::Client client(ep.host, ep.port);
  const auto sec = static_cast<time_t>(timeout_ms / 1000);
  const auto usec = static_cast<time_t>((timeout_ms % 1000) * 1000);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  auto res = client.Post(ep.path, body, "application/json");
  const double elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  if (!res) {
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed_ms >= timeout_ms);
    throw RemoteError(timed_out ? RemoteError::Kind::timeout : RemoteError::Kind::network,
                      "remote sampler: " + endpoint + ": " + httplib::to_string(err));
  }
  if (res->status != 200)
    malformed("HTTP status " + std::to_string(res->status));
  auto set = parse_response(res->body, model.size(), energy_of);
  set.wall_time_us = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
  return set;
}

}  // namespace remote_detail

/// Sends the penalized problem to a remote sampler. Energies in the
/// response are checked against energy(problem, mask).
inline SampleSet remote_sample(const QuboProblem& problem, const std::string& endpoint,
                               std::size_t shots, int timeout_ms) {
  return remote_detail::post(expand_penalized(problem), endpoint, shots, timeout_ms,
                             [&](const FeatureMask& w) { return energy(problem, w); });
}

inline SampleSet remote_sample(const QuadraticModel& model, const std::string& endpoint,
                               std::size_t shots, int timeout_ms) {
  return remote_detail::post(model, endpoint, shots, timeout_ms,
                             [&](const FeatureMask& w) { return model.energy(w); });
}

}  // namespace qafs

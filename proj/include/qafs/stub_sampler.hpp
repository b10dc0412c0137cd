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

// In-process loopback sampling server speaking the remote-sampler wire
// protocol. Solves requests exhaustively (up to 24 variables) and can be
// told to misbehave for client tests.

// Eigen first: resolver headers pulled in by httplib define _res.
#include <Eigen/Dense>
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <thread>

#include "qafs/remote.hpp"
#include "qafs/samplers.hpp"

namespace qafs {

class StubSampler {
 public:
  enum class Mode { correct, wrong_energy, delay, server_error, garbage };

  explicit StubSampler(Mode mode = Mode::correct, int delay_ms = 0) : mode_(mode), delay_ms_(delay_ms) {
    server_.Post("/sample", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (mode_ == Mode::delay) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
      if (mode_ == Mode::server_error) {
        res.status = 500;
        res.set_content("{\"error\":\"unavailable\"}", "application/json");
        return;
      }
      if (mode_ == Mode::garbage) {
        res.set_content("{\"samples\": [[0,1]]}", "application/json");
        return;
      }
      try {
        std::size_t shots = 1;
        const auto model = from_wire_request(json::parse(req.body), &shots);
        auto set = exhaustive_solve(model);
        set.samples.resize(1);
        set.samples.front().occurrences = shots;
        if (mode_ == Mode::wrong_energy) set.samples.front().energy += 1.0;
        res.set_content(to_wire_response(set).dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubSampler() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  StubSampler(const StubSampler&) = delete;
  StubSampler& operator=(const StubSampler&) = delete;

  int port() const { return port_; }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/sample"; }
  int requests() const { return requests_; }

 private:
  Mode mode_;
  int delay_ms_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
};

}  // namespace qafs

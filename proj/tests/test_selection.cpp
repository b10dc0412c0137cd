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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "qafs/dataset.hpp"
#include "qafs/mine.hpp"
#include "qafs/selection.hpp"
#include "qafs/stub_sampler.hpp"

using namespace qafs;

namespace {

SamplerChoice exhaustive() {
  SamplerChoice s;
  s.kind = SamplerChoice::Kind::exhaustive;
  return s;
}

SamplerChoice anneal(std::size_t shots) {
  SamplerChoice s;
  s.shots = shots;
  return s;
}

Dataset auto_data() { return load_auto_csv(std::string(QAFS_TEST_DATA_DIR) + "/imports-85.data"); }

}  // namespace

TEST_CASE("exhaustive-sampler selection equals a direct solve") {
  const auto d = generate_friedman1(80, 12, 1.0, 3);
  const auto metric = MetricKind::pcc_metric();
  const auto r = qafs_select(d, metric, 1000.0, 10.0, 5, exhaustive(), 3, 0);
  const auto direct = best_mask(exhaustive_solve(QuboProblem(build_q(d, metric), 1000.0, 10.0, 5)));
  CHECK(r.mask == direct);
  CHECK(r.method_label == "QPCC");
  CHECK(r.metadata["bootstrap_best_energies"].size() == 3);
  CHECK(r.metadata["winning_energy"].get<double>() ==
        energy(QuboProblem(build_q(d, metric), 1000.0, 10.0, 5), r.mask));
}

TEST_CASE("exhaustive-sampler selection is the global minimiser") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto d = generate_friedman1(60, 10, 0.5, 20 + seed);
    const auto q = build_q(d, MetricKind::pcc_metric());
    const QuboProblem p(q, 1.0, 0.2, 3);
    const auto r = qafs_select(q, "PCC", 1.0, 0.2, 3, exhaustive(), 1, 0);
    double best = INFINITY;
    for (std::uint32_t bits = 1; bits < (1U << 10); ++bits) {
      std::vector<std::uint8_t> b(10);
      for (int i = 0; i < 10; ++i) b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((bits >> i) & 1U);
      best = std::min(best, energy(p, FeatureMask(b)));
    }
    CHECK(energy(p, r.mask) <= best + 1e-12);
  }
}

TEST_CASE("more bootstrap sets never give a worse winner") {
  const auto d = generate_friedman1(70, 30, 1.0, 4);
  AnnealSchedule quick;
  quick.sweeps = 10;
  auto s = anneal(20);
  s.schedule = quick;
  const auto one = qafs_select(d, MetricKind::pcc_metric(), 1000.0, 10.0, 5, s, 1, 9);
  const auto ten = qafs_select(d, MetricKind::pcc_metric(), 1000.0, 10.0, 5, s, 10, 9);
  CHECK(ten.metadata["winning_energy"].get<double>() <= one.metadata["winning_energy"].get<double>());
  CHECK(one.mask.k() >= 1);
}

TEST_CASE("qubo selection on clean friedman data keeps the strong signal columns") {
  const auto d = generate_friedman1(300, 20, 0.0, 5);
  const auto r = qafs_select(d, MetricKind::pcc_metric(), 1000.0, 10.0, 5, anneal(2000), 2, 1);
  const auto idx = r.mask.indices();
  const std::set<std::size_t> s(idx.begin(), idx.end());
  CHECK(s.count(3) == 1);
  std::size_t signal = 0;
  for (std::size_t i = 0; i < 5; ++i) signal += s.count(i);
  CHECK(signal >= 3);
  CHECK(signal * 2 > s.size());
}

TEST_CASE("qubo selection never returns an empty mask") {
  // Relevance is zero everywhere, so the empty mask ties with others when
  // lambda = 0; the selector must still return a feature.
  Eigen::MatrixXd x(6, 3);
  x << 1, 2, 3, 2, 1, 3, 3, 3, 1, 1, 3, 2, 2, 2, 2, 3, 1, 1;
  const auto d = Dataset::numeric(x, Eigen::VectorXd::Constant(6, 1.0));
  const auto r = qafs_select(d, MetricKind::pcc_metric(), 1.0, 0.0, 1, exhaustive(), 1, 0);
  CHECK(r.mask.k() >= 1);
}

TEST_CASE("remote sampler selection through the stub, with and without fallback") {
  const auto d = generate_friedman1(50, 8, 1.0, 6);
  StubSampler stub;
  SamplerChoice remote;
  remote.kind = SamplerChoice::Kind::remote;
  remote.endpoint = stub.endpoint();
  remote.shots = 50;
  const auto r = qafs_select(d, MetricKind::pcc_metric(), 1000.0, 10.0, 3, remote, 2, 0);
  CHECK(r.mask == qafs_select(d, MetricKind::pcc_metric(), 1000.0, 10.0, 3, exhaustive(), 1, 0).mask);
  CHECK(stub.requests() == 2);

  remote.endpoint = "http://127.0.0.1:1/sample";
  remote.timeout_ms = 300;
  CHECK_THROWS_AS(qafs_select(d, MetricKind::pcc_metric(), 1000.0, 10.0, 3, remote, 1, 0), RemoteError);
  remote.fallback_to_anneal = true;
  remote.shots = 200;
  const auto fb = qafs_select(d, MetricKind::pcc_metric(), 1000.0, 10.0, 3, remote, 1, 0);
  CHECK(fb.mask.k() >= 1);
  CHECK(fb.metadata.contains("notes"));
}

TEST_CASE("greedy ranking keeps the top MIC columns") {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(120, 4);
  Eigen::VectorXd y(120);
  for (Eigen::Index i = 0; i < 120; ++i) {
    y(i) = u(g);
    x(i, 0) = y(i);                        // strongest
    x(i, 1) = u(g);                        // noise
    x(i, 2) = y(i) + 0.15 * u(g);          // strong
    x(i, 3) = 0.3 * y(i) + u(g);           // weak
  }
  const auto d = Dataset::numeric(x, y);
  const auto r = greedy_ranked_select(d, 0.5);
  CHECK(r.mask.indices() == std::vector<std::size_t>{0, 2});
  // Oracle: recompute MIC per column and take the top two.
  std::vector<std::pair<double, std::size_t>> scores;
  for (std::size_t j = 0; j < 4; ++j) scores.push_back({-mic(d.column(j), d.target_span()), j});
  std::sort(scores.begin(), scores.end());
  std::vector<std::size_t> top{scores[0].second, scores[1].second};
  std::sort(top.begin(), top.end());
  CHECK(r.mask.indices() == top);
  CHECK(greedy_ranked_select(d, 1.0).mask.k() == 4);
  CHECK(greedy_ranked_select(d, 0.01).mask.k() == 1);
  CHECK_THROWS_AS(greedy_ranked_select(d, 0.0), InvalidArgument);
}

TEST_CASE("greedy ranking on the automobile data keeps twelve columns") {
  const auto d = auto_data();
  REQUIRE(d.cols() == 25);
  CHECK(greedy_ranked_select(d, 0.5).mask.k() == 12);
}

TEST_CASE("greedy ties keep the lower column index") {
  Eigen::MatrixXd x(30, 3);
  Eigen::VectorXd y(30);
  for (Eigen::Index i = 0; i < 30; ++i) x(i, 0) = x(i, 1) = x(i, 2) = y(i) = static_cast<double>(i);
  CHECK(greedy_ranked_select(Dataset::numeric(x, y), 0.34).mask.indices() == std::vector<std::size_t>{0});
}

TEST_CASE("recursive elimination basics") {
  const auto d = generate_friedman1(60, 6, 0.5, 7);
  const auto keep_all = rfe_select(d, ModelKind::linear, 6);
  CHECK(keep_all.mask.k() == 6);
  CHECK(keep_all.metadata["elimination_order"].empty());

  Eigen::MatrixXd x = d.features();
  x.col(2).setConstant(1.0);
  const auto c = rfe_select(Dataset::numeric(x, d.target()), ModelKind::linear, 5);
  CHECK(c.metadata["elimination_order"][0] == 2);
  const auto cg = rfe_select(Dataset::numeric(x, d.target()), ModelKind::gbr, 5);
  CHECK(cg.metadata["elimination_order"][0] == 2);
  CHECK_THROWS_AS(rfe_select(d, ModelKind::linear, 7), InvalidArgument);
  CHECK_THROWS_AS(rfe_select(d, ModelKind::linear, 0), InvalidArgument);
}

TEST_CASE("recursive elimination on noiseless friedman keeps the large linear terms") {
  const auto d = generate_friedman1(200, 15, 0.0, 8);
  const auto r = rfe_select(d, ModelKind::linear, 5);
  const auto idx = r.mask.indices();
  const std::set<std::size_t> s(idx.begin(), idx.end());
  CHECK(s.count(3) == 1);
  CHECK(s.count(4) == 1);
  CHECK(r.mask.k() == 5);
}

TEST_CASE("recursive elimination masks are nested") {
  const auto d = generate_friedman1(80, 10, 1.0, 9);
  std::vector<FeatureMask> masks;
  for (std::size_t k = 10; k >= 1; --k) masks.push_back(rfe_select(d, ModelKind::linear, k).mask);
  for (std::size_t a = 1; a < masks.size(); ++a)
    for (auto i : masks[a].indices()) CHECK(masks[a - 1][i]);
}

TEST_CASE("all features") {
  Eigen::MatrixXd x(3, 3);
  x << 1, 2, 3, 4, 5, 6, 7, 8, 10;
  const auto d = Dataset::numeric(x, Eigen::Vector3d(1, 2, 3));
  const auto r = all_features(d);
  CHECK(r.mask.bits() == std::vector<std::uint8_t>{1, 1, 1});
  CHECK(r.select_time_us == 0.0);
  CHECK(filter_columns(d, r.mask) == d);
  CHECK(all_features(auto_data()).mask.k() == 25);
}

TEST_CASE("selectors ignore test rows") {
  auto d = generate_friedman1(60, 8, 1.0, 10);
  const auto split_a = split(d, SplitPlan{0.7, 1, 3}).front();
  Eigen::MatrixXd poisoned = d.features();
  Eigen::VectorXd y = d.target();
  for (auto r : split_a.test_rows) {
    poisoned.row(static_cast<Eigen::Index>(r)).setConstant(1e6);
    y(static_cast<Eigen::Index>(r)) = -1e6;
  }
  const auto split_b = split(Dataset::numeric(poisoned, y), SplitPlan{0.7, 1, 3}).front();
  REQUIRE(split_a.train == split_b.train);
  CHECK(qafs_select(split_a.train, MetricKind::mic_metric(), 1000, 10, 3, anneal(100), 1, 0).mask ==
        qafs_select(split_b.train, MetricKind::mic_metric(), 1000, 10, 3, anneal(100), 1, 0).mask);
  CHECK(greedy_ranked_select(split_a.train).mask == greedy_ranked_select(split_b.train).mask);
  CHECK(rfe_select(split_a.train, ModelKind::gbr, 4).mask == rfe_select(split_b.train, ModelKind::gbr, 4).mask);
}

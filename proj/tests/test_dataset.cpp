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

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qafs/dataset.hpp"

using Catch::Matchers::WithinAbs;
using namespace qafs;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::string auto_path = std::string(QAFS_TEST_DATA_DIR) + "/imports-85.data";

// Independent line scan: split on commas by hand and count rows that pass
// each missing-value policy.
struct LineCounts {
  std::size_t total = 0, price_present = 0, no_missing = 0;
};

LineCounts scan(const std::string& text) {
  LineCounts c;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++c.total;
    std::vector<std::string> f(1);
    for (char ch : line) {
      if (ch == ',') f.emplace_back();
      else f.back() += ch;
    }
    if (f.back() != "?") ++c.price_present;
    bool clean = true;
    for (const auto& s : f) clean = clean && s != "?";
    if (clean) ++c.no_missing;
  }
  return c;
}

std::string auto_row(const std::string& price, const std::string& bore = "3.47", const std::string& losses = "122") {
  return "3," + losses + ",alfa-romero,gas,std,two,convertible,rwd,front,88.60,168.80,64.10,48.80,2548,dohc,four,130,mpfi," +
         bore + ",2.68,9.00,111,5000,21,27," + price;
}

}  // namespace

TEST_CASE("friedman response at the centre point") {
  const std::vector<double> x{0.5, 0.5, 0.5, 0.5, 0.5, 0.9, 0.1};
  const double expected = 10.0 * std::sin(std::numbers::pi / 4.0) + 0.0 + 5.0 + 2.5;
  CHECK_THAT(friedman1_response(x), WithinAbs(14.5711, 1e-4));
  CHECK_THAT(friedman1_response(x), WithinAbs(expected, 1e-9));
}

TEST_CASE("friedman response vanishes at (0, 0, 0.5, 0, 0)") {
  const std::vector<double> x{0.0, 0.0, 0.5, 0.0, 0.0, 0.7};
  CHECK_THAT(friedman1_response(x), WithinAbs(0.0, 1e-12));
}

TEST_CASE("friedman generator shape, range and determinism") {
  const auto d = generate_friedman1(100, 50, 1.0, 7);
  CHECK(d.rows() == 100);
  CHECK(d.cols() == 50);
  CHECK(d.features().minCoeff() >= 0.0);
  CHECK(d.features().maxCoeff() < 1.0);
  CHECK(d == generate_friedman1(100, 50, 1.0, 7));
  CHECK_FALSE(d == generate_friedman1(100, 50, 1.0, 8));
  CHECK_THROWS_AS(generate_friedman1(10, 4, 1.0, 0), InvalidArgument);
  CHECK_THROWS_AS(generate_friedman1(10, 5, -1.0, 0), InvalidArgument);
}

TEST_CASE("noiseless friedman targets match the response recomputed from features") {
  const auto d = generate_friedman1(200, 8, 0.0, 3);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    const double x1 = d.features()(i, 0), x2 = d.features()(i, 1), x3 = d.features()(i, 2);
    const double x4 = d.features()(i, 3), x5 = d.features()(i, 4);
    const double y = 10 * std::sin(std::numbers::pi * x1 * x2) + 20 * (x3 - 0.5) * (x3 - 0.5) + 10 * x4 + 5 * x5;
    REQUIRE_THAT(d.target()(i), WithinAbs(y, 1e-9));
  }
}

TEST_CASE("friedman noise has the requested spread") {
  const auto noisy = generate_friedman1(4000, 5, 2.0, 11);
  double ss = 0.0, mean = 0.0;
  std::vector<double> e;
  for (std::size_t r = 0; r < noisy.rows(); ++r) {
    std::vector<double> row(5);
    for (int c = 0; c < 5; ++c) row[static_cast<std::size_t>(c)] = noisy.features()(static_cast<Eigen::Index>(r), c);
    e.push_back(noisy.target()(static_cast<Eigen::Index>(r)) - friedman1_response(row));
    mean += e.back();
  }
  mean /= static_cast<double>(e.size());
  for (double v : e) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(e.size() - 1));
  CHECK_THAT(mean, WithinAbs(0.0, 0.15));
  CHECK_THAT(sd, WithinAbs(2.0, 0.1));
}

TEST_CASE("ordinal encoding follows first appearance") {
  const std::vector<std::string> a{"gas", "diesel", "gas"};
  CHECK(ordinal_encode(a) == std::vector<double>{0, 1, 0});
  const std::vector<std::string> b{"a"};
  CHECK(ordinal_encode(b) == std::vector<double>{0});
  const std::vector<std::string> c{"x", "y", "z", "y"};
  CHECK(ordinal_encode(c) == std::vector<double>{0, 1, 2, 1});
  const auto codes = ordinal_encode(c);
  CHECK(std::set<double>(codes.begin(), codes.end()).size() == 3);
}

TEST_CASE("dataset invariants are enforced") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  CHECK_NOTHROW(Dataset::numeric(x, y));
  CHECK_THROWS_AS(Dataset::numeric(x, Eigen::VectorXd::Ones(2)), InvalidArgument);
  CHECK_THROWS_AS(Dataset::numeric(x.topRows(1), y.head(1)), InvalidArgument);
  Eigen::MatrixXd bad = x;
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(Dataset::numeric(bad, y), InvalidArgument);
  CHECK_THROWS_AS(Dataset(x, y, {"a", "a"}, {ColumnKind::numeric, ColumnKind::numeric}), InvalidArgument);
}

TEST_CASE("filter_columns keeps selected columns in order") {
  Eigen::MatrixXd x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  const auto d = Dataset::numeric(x, Eigen::Vector2d(7, 8));
  CHECK(filter_columns(d, FeatureMask::all(3)) == d);
  const auto one = filter_columns(d, FeatureMask({0, 1, 0}));
  REQUIRE(one.cols() == 1);
  CHECK(one.features()(0, 0) == 2);
  CHECK(one.features()(1, 0) == 5);
  CHECK(one.feature_names()[0] == "x2");
  CHECK(one.target() == d.target());
  const auto twice = filter_columns(filter_columns(d, FeatureMask({1, 0, 1})), FeatureMask::all(2));
  CHECK(twice == filter_columns(d, FeatureMask({1, 0, 1})));
  CHECK_THROWS_AS(filter_columns(d, FeatureMask::none(3)), InvalidArgument);
  CHECK_THROWS_AS(filter_columns(d, FeatureMask::all(2)), InvalidArgument);

  const auto f = generate_friedman1(100, 50, 1.0, 0);
  const std::vector<std::size_t> five{0, 1, 2, 3, 4};
  CHECK(filter_columns(f, FeatureMask::from_indices(50, five)).cols() == 5);
}

TEST_CASE("feature mask bookkeeping") {
  const FeatureMask m({0, 1, 1, 0, 1});
  CHECK(m.k() == 3);
  CHECK(m.indices() == std::vector<std::size_t>{1, 2, 4});
  CHECK(m.to_string() == "01101");
  CHECK(FeatureMask::none(4).k() == 0);
  CHECK(FeatureMask::all(4).k() == 4);
}

TEST_CASE("split sizes, disjointness and determinism") {
  const auto d = generate_friedman1(10, 5, 0.0, 1);
  const SplitPlan plan{0.7, 3, 99};
  const auto s = split(d, plan);
  REQUIRE(s.size() == 3);
  for (const auto& p : s) {
    CHECK(p.train.rows() == 7);
    CHECK(p.test.rows() == 3);
    std::set<std::size_t> all(p.train_rows.begin(), p.train_rows.end());
    for (auto r : p.test_rows) CHECK(all.insert(r).second);
    CHECK(all.size() == 10);
  }
  const auto again = split(d, plan);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(again[r].train_rows == s[r].train_rows);
    CHECK(again[r].test_rows == s[r].test_rows);
  }
  CHECK(s[0].train_rows != s[1].train_rows);

  const auto big = split(generate_friedman1(100, 50, 1.0, 0), SplitPlan{0.7, 3, 0});
  for (const auto& p : big) {
    CHECK(p.train.rows() == 70);
    CHECK(p.test.rows() == 30);
  }
  CHECK_THROWS_AS(split(generate_friedman1(2, 5, 0.0, 0), SplitPlan{0.7, 1, 0}), InvalidArgument);
  CHECK_THROWS_AS(split(d, SplitPlan{1.0, 1, 0}), InvalidArgument);
}

TEST_CASE("split rows are copied from the source dataset") {
  const auto d = generate_friedman1(20, 6, 1.0, 4);
  const auto s = split(d, SplitPlan{0.7, 1, 5}).front();
  for (std::size_t i = 0; i < s.test_rows.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(s.test_rows[i]);
    CHECK(s.test.features().row(static_cast<Eigen::Index>(i)) == d.features().row(src));
    CHECK(s.test.target()(static_cast<Eigen::Index>(i)) == d.target()(src));
  }
}

TEST_CASE("imports-85 loads with the default policy") {
  const auto text = read_file(auto_path);
  const auto counts = scan(text);
  REQUIRE(counts.total == 205);
  const auto d = load_auto_csv(auto_path);
  CHECK(d.cols() == 25);
  CHECK(d.rows() == counts.price_present);
  CHECK(d.rows() == 201);
  CHECK(d.feature_names().front() == "symboling");
  CHECK(d.feature_names().back() == "highway-mpg");
  // make is categorical, wheel-base numeric
  CHECK(d.column_kinds()[2] == ColumnKind::ordinal_encoded);
  CHECK(d.column_kinds()[9] == ColumnKind::numeric);
  CHECK(d.column_kinds()[1] == ColumnKind::numeric);
  CHECK(d.target()(0) == 13495.0);
}

TEST_CASE("imports-85 drop-any-missing matches a line-scan count") {
  const auto counts = scan(read_file(auto_path));
  const auto d = load_auto_csv(auto_path, MissingPolicy::drop_any_missing);
  CHECK(d.rows() == counts.no_missing);
  CHECK(d.rows() < 201);
}

TEST_CASE("imports-85 median imputation") {
  // bore missing in the middle row: median of 3.00 and 4.00 is 3.50
  const std::string text = auto_row("100", "3.00") + "\n" + auto_row("200", "?") + "\n" + auto_row("300", "4.00") + "\n";
  const auto d = parse_auto_csv(text, MissingPolicy::drop_row_if_target_missing_impute_rest);
  REQUIRE(d.rows() == 3);
  CHECK(d.features()(1, 18) == 3.5);
  CHECK(d.column_kinds()[1] == ColumnKind::numeric);
  // a column with no values at all cannot be imputed
  const std::string empty_column = auto_row("100", "3.00", "?") + "\n" + auto_row("200", "3.10", "?") + "\n";
  CHECK_THROWS_WITH(parse_auto_csv(empty_column, MissingPolicy::drop_row_if_target_missing_impute_rest),
                    Catch::Matchers::ContainsSubstring("normalized-losses"));
}

TEST_CASE("imports-85 accepts CRLF and trailing blank lines") {
  const std::string lf = auto_row("1") + "\n" + auto_row("2") + "\n";
  const std::string crlf = auto_row("1") + "\r\n" + auto_row("2") + "\r\n\r\n\n";
  const auto a = parse_auto_csv(lf, MissingPolicy::drop_row_if_target_missing_impute_rest);
  const auto b = parse_auto_csv(crlf, MissingPolicy::drop_row_if_target_missing_impute_rest);
  CHECK(a == b);
}

TEST_CASE("imports-85 load errors") {
  CHECK_THROWS_AS(load_auto_csv("/nonexistent/imports-85.data"), LoadError);
  const std::string all_missing = auto_row("?") + "\n" + auto_row("?") + "\n";
  CHECK_THROWS_WITH(parse_auto_csv(all_missing, MissingPolicy::drop_row_if_target_missing_impute_rest),
                    Catch::Matchers::ContainsSubstring("zero rows"));
  const std::string short_row = auto_row("1") + "\n1,2,3\n";
  CHECK_THROWS_WITH(parse_auto_csv(short_row, MissingPolicy::drop_row_if_target_missing_impute_rest),
                    Catch::Matchers::ContainsSubstring("row 2"));
  const std::string bad_price = auto_row("1") + "\n" + auto_row("cheap") + "\n";
  CHECK_THROWS_AS(parse_auto_csv(bad_price, MissingPolicy::drop_row_if_target_missing_impute_rest), LoadError);
}

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "uxfb/error.hpp"
#include "uxfb/gbt.hpp"

using namespace uxfb;

namespace {

struct Data {
  Matrix x;
  std::vector<int> y;
};

Data separable_1d() {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) {
    rows.push_back({-1.0 - i * 0.1});
    y.push_back(0);
    rows.push_back({i * 0.1});
    y.push_back(1);
  }
  return {Matrix::from_rows(rows), y};
}

gbt::Params depth(int d, int rounds, double eta = 0.3) {
  gbt::Params p;
  p.max_depth = d;
  p.n_rounds = rounds;
  p.learning_rate = eta;
  return p;
}

}  // namespace

TEST_CASE("zero rounds predicts 0.5") {
  const auto [x, y] = separable_1d();
  const auto m = gbt::train_binary(x, y, depth(3, 0));
  CHECK(m.trees.empty());
  CHECK(gbt::predict_proba(m, std::vector<double>{3.0}) == 0.5);
  CHECK(gbt::training_loss_curve(m).empty());
}

TEST_CASE("separable data is fit perfectly and loss falls") {
  const auto [x, y] = separable_1d();
  const auto m = gbt::train_binary(x, y, depth(1, 50));
  for (std::size_t i = 0; i < x.rows(); ++i) CHECK((gbt::predict_proba(m, x.row(i)) >= 0.5) == (y[i] == 1));
  const auto curve = gbt::training_loss_curve(m);
  REQUIRE(curve.size() == 50);
  CHECK(curve.back() < curve.front());
  CHECK(curve.front() < std::log(2.0));
}

TEST_CASE("huge L2 weight pins predictions at 0.5") {
  const auto [x, y] = separable_1d();
  auto p = depth(2, 10);
  p.l2_weight = 1e9;
  const auto m = gbt::train_binary(x, y, p);
  for (const auto& t : m.trees)
    for (const auto& n : t.nodes)
      if (n.is_leaf()) CHECK(std::abs(n.weight) < 1e-6);
  for (std::size_t i = 0; i < x.rows(); ++i) CHECK(gbt::predict_proba(m, x.row(i)) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("hand-built trees") {
  gbt::Model m;
  m.n_features = 1;
  m.params.learning_rate = 1.0;
  m.trees.push_back({{gbt::Node{}}});
  CHECK(gbt::predict_proba(m, std::vector<double>{1.0}) == 0.5);

  m.trees[0].nodes = {gbt::Node{0, 0.0, 1, 2, 0.0}, gbt::Node{-1, 0, -1, -1, -2.0}, gbt::Node{-1, 0, -1, -1, 2.0}};
  CHECK(gbt::predict_proba(m, std::vector<double>{-1.0}) == doctest::Approx(0.1192).epsilon(1e-4));
  CHECK(gbt::predict_proba(m, std::vector<double>{1.0}) == doctest::Approx(0.8808).epsilon(1e-4));
  CHECK(gbt::predict_proba(m, std::vector<double>{0.0}) == gbt::predict_proba(m, std::vector<double>{1.0}));
  CHECK(gbt::predict_proba(m, std::vector<double>{-1.0}) == gbt::predict_proba(m, std::vector<double>{-1.0}));
  CHECK_THROWS_AS(gbt::predict_proba(m, std::vector<double>{1.0, 2.0}), Error);
  CHECK(m.trees[0].depth() == 1);
}

TEST_CASE("identical features with balanced targets give a flat curve") {
  std::vector<std::vector<double>> rows(20, {1.0, 2.0});
  std::vector<int> y(20);
  for (int i = 0; i < 20; ++i) y[static_cast<std::size_t>(i)] = i % 2;
  const auto m = gbt::train_binary(Matrix::from_rows(rows), y, depth(3, 5));
  const auto c = gbt::training_loss_curve(m);
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(std::abs(c[i] - c[0]) < 1e-9);
  for (const auto& t : m.trees) CHECK(t.nodes.size() == 1);
}

TEST_CASE("single-class targets fall back to the smoothed base rate") {
  const Matrix x = Matrix::from_rows({{1.0}, {2.0}, {3.0}});
  const std::vector<int> y = {0, 0, 0};
  const auto m = gbt::train_binary(x, y, depth(2, 10));
  CHECK(!m.warning.empty());
  CHECK(m.trees.empty());
  CHECK(gbt::predict_proba(m, std::vector<double>{1.0}) == doctest::Approx(0.5 / 4.0));
  CHECK_THROWS(gbt::training_loss_curve(m));
}

TEST_CASE("first split matches exhaustive search") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 6 + rng.below(10), d = 1 + rng.below(3);
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : rows[i]) v = static_cast<double>(rng.below(5));
      y[i] = static_cast<int>(rng.below(2));
    }
    auto p = depth(1, 1, 1.0);
    p.l1_weight = trial % 2 ? 0.3 : 0.0;
    p.min_child_weight = 0.0;
    const auto m = gbt::train_binary(Matrix::from_rows(rows), y, p);
    const auto want = oracle::best_first_split(rows, y, p.l2_weight, p.l1_weight, 0.0, 0.0);
    if (m.trees.empty()) continue;  // single-class draw
    const auto& nodes = m.trees[0].nodes;
    REQUIRE(nodes[0].is_leaf() == !want.found);
    if (!want.found) {
      CHECK(nodes[0].weight == doctest::Approx(want.root_weight));
      continue;
    }
    CHECK(nodes[static_cast<std::size_t>(nodes[0].left)].weight == doctest::Approx(want.left_weight));
    CHECK(nodes[static_cast<std::size_t>(nodes[0].right)].weight == doctest::Approx(want.right_weight));
    if (want.runner_up < want.gain - 1e-9) {
      CHECK(nodes[0].feature == want.feature);
      CHECK(nodes[0].threshold == want.threshold);
    }
  }
}

TEST_CASE("JSON round trip and fingerprint check") {
  const auto [x, y] = separable_1d();
  auto m = gbt::train_binary(x, y, depth(2, 5));
  m.fingerprint = "abc";
  const auto back = gbt::model_from_json(gbt::to_json(m));
  CHECK(back.trees == m.trees);
  CHECK(back.base_score == m.base_score);
  CHECK(back.params == m.params);
  CHECK_THROWS_AS(gbt::model_from_json(gbt::to_json(m), "xyz"), Error);
  testing::TempDir dir("gbt");
  gbt::save_model(dir / "m.json", m);
  CHECK(gbt::load_model(dir / "m.json", "abc").trees == m.trees);
}

TEST_CASE("prefix prediction equals training fewer rounds") {
  const auto [x, y] = separable_1d();
  const auto long_run = gbt::train_binary(x, y, depth(2, 12));
  const auto short_run = gbt::train_binary(x, y, depth(2, 5));
  for (std::size_t i = 0; i < x.rows(); i += 7)
    CHECK(gbt::predict_margin(long_run, x.row(i), 5) == gbt::predict_margin(short_run, x.row(i)));
}

TEST_CASE("parameter validation") {
  gbt::Params p;
  p.learning_rate = 0.0;
  CHECK_THROWS(p.validate());
  p = {};
  p.max_depth = 0;
  CHECK_THROWS(p.validate());
  p = {};
  p.l2_weight = -1;
  CHECK_THROWS(p.validate());
  p = {};
  CHECK(gbt::params_from_json(gbt::params_to_json(p)) == p);
}

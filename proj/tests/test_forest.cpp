#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "popref/errors.hpp"
#include "popref/forest.hpp"
#include "popref/random.hpp"
#include "support/oracles.hpp"

using namespace popref;

namespace {

// all-features params for interpolation checks
TreeParams interp_params() { return {0, 1, 15}; }

FeatureVector padded(double x0) {
  FeatureVector f{};
  f[0] = x0;
  return f;
}

double tree_train_mse(const RegressionTree& tree,
                      const std::vector<FeatureVector>& X,
                      const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    double d = predict_tree(tree, X[i]) - y[i];
    acc += d * d;
  }
  return acc / static_cast<double>(X.size());
}

}  // namespace

TEST_CASE("fit_tree: constant labels give a single leaf") {
  auto X = testing::random_matrix(5, 3);
  std::vector<double> y(5, 5.0);
  RegressionTree tree = fit_tree(X, y, interp_params(), 1);
  CHECK(tree.nodes.size() == 1);
  CHECK(tree.nodes[0].feature == -1);
  CHECK(tree.nodes[0].value == 5.0);
}

TEST_CASE("fit_tree: two separable points give two exact leaves") {
  std::vector<FeatureVector> X = {padded(0.0), padded(1.0)};
  std::vector<double> y = {0.0, 10.0};
  RegressionTree tree = fit_tree(X, y, interp_params(), 1);
  CHECK(tree.nodes.size() == 3);
  CHECK(predict_tree(tree, padded(0.0)) == 0.0);
  CHECK(predict_tree(tree, padded(1.0)) == 10.0);
}

TEST_CASE("fit_tree: interpolates 50 distinct random rows") {
  auto X = testing::random_matrix(50, 17);
  auto y = testing::random_vector(50, 18);
  RegressionTree tree = fit_tree(X, y, interp_params(), 2);
  CHECK(tree_train_mse(tree, X, y) <= 1e-12);
}

TEST_CASE("fit_tree input validation") {
  std::vector<FeatureVector> empty;
  std::vector<double> y0;
  CHECK_THROWS_AS(fit_tree(empty, y0, interp_params(), 1), EmptyData);
  auto X = testing::random_matrix(4, 1);
  std::vector<double> bad_y = {1.0, 2.0};
  CHECK_THROWS_AS(fit_tree(X, bad_y, interp_params(), 1), ShapeMismatch);
}

TEST_CASE("predict_tree: leaf and boundary routing") {
  RegressionTree leaf;
  leaf.nodes.push_back({-1, 0.0, -1, -1, 5.0, 0.0});
  CHECK(predict_tree(leaf, padded(123.0)) == 5.0);

  RegressionTree split;
  split.nodes.push_back({0, 0.5, 1, 2, 0.0, 1.0});
  split.nodes.push_back({-1, 0.0, -1, -1, 1.0, 0.0});
  split.nodes.push_back({-1, 0.0, -1, -1, 2.0, 0.0});
  CHECK(predict_tree(split, padded(0.2)) == 1.0);
  CHECK(predict_tree(split, padded(0.5)) == 1.0);  // tie routes left
  CHECK(predict_tree(split, padded(0.7)) == 2.0);
}

TEST_CASE("fit_forest: constant labels and degenerate ensemble") {
  auto X = testing::random_matrix(20, 5);
  std::vector<double> y(20, 3.25);
  Forest forest = fit_forest(X, y, interp_params(), 10, 7);
  for (const auto& tree : forest.trees) CHECK(tree.nodes.size() == 1);
  CHECK(predict_forest(forest, X[0]) == 3.25);

  // bootstrap disabled, one tree: identical to fit_tree under the derived seed
  auto y2 = testing::random_vector(20, 6);
  Forest one = fit_forest(X, y2, interp_params(), 1, 99, 1, false);
  RegressionTree direct = fit_tree(X, y2, interp_params(), mix_seed(99, 0));
  REQUIRE(one.trees.size() == 1);
  REQUIRE(one.trees[0].nodes.size() == direct.nodes.size());
  for (std::size_t i = 0; i < direct.nodes.size(); ++i) {
    CHECK(one.trees[0].nodes[i].feature == direct.nodes[i].feature);
    CHECK(one.trees[0].nodes[i].threshold == direct.nodes[i].threshold);
    CHECK(one.trees[0].nodes[i].value == direct.nodes[i].value);
  }
}

TEST_CASE("fit_forest: same seed is bit-identical, thread count irrelevant") {
  auto X = testing::random_matrix(120, 40);
  auto y = testing::random_vector(120, 41);
  TreeParams params{0, 2, 5};
  Forest a = fit_forest(X, y, params, 12, 1234, 1);
  Forest b = fit_forest(X, y, params, 12, 1234, 4);
  auto queries = testing::random_matrix(100, 42);
  for (const auto& q : queries) {
    double pa = predict_forest(a, q);
    double pb = predict_forest(b, q);
    CHECK(pa == pb);
  }
}

TEST_CASE("predict_forest: mean of tree outputs") {
  RegressionTree t1, t2;
  t1.nodes.push_back({-1, 0.0, -1, -1, 1.0, 0.0});
  t2.nodes.push_back({-1, 0.0, -1, -1, 3.0, 0.0});
  Forest forest{{t1, t2}, interp_params(), 2, 0};
  CHECK(predict_forest(forest, padded(0.0)) == 2.0);

  Forest single{{t1}, interp_params(), 1, 0};
  CHECK(predict_forest(single, padded(0.0)) == predict_tree(t1, padded(0.0)));
}

TEST_CASE("predict_forest equals externally recomputed mean") {
  auto X = testing::random_matrix(60, 50);
  auto y = testing::random_vector(60, 51);
  Forest forest = fit_forest(X, y, {0, 2, 5}, 9, 77);
  auto queries = testing::random_matrix(100, 52);
  for (const auto& q : queries) {
    std::vector<double> outs;
    for (const auto& tree : forest.trees) outs.push_back(predict_tree(tree, q));
    std::sort(outs.begin(), outs.end());
    double mean = 0.0;
    for (double v : outs) mean += v;
    mean /= static_cast<double>(outs.size());
    CHECK(predict_forest(forest, q) == mean);
  }
}

TEST_CASE("predict_forest is invariant under tree permutation") {
  auto X = testing::random_matrix(80, 60);
  auto y = testing::random_vector(80, 61);
  Forest forest = fit_forest(X, y, {0, 2, 5}, 15, 5);
  Forest shuffled = forest;
  std::reverse(shuffled.trees.begin(), shuffled.trees.end());
  std::swap(shuffled.trees[0], shuffled.trees[7]);
  auto queries = testing::random_matrix(50, 62);
  for (const auto& q : queries)
    CHECK(predict_forest(forest, q) == predict_forest(shuffled, q));
}

TEST_CASE("feature_importance: zeros without splits, argmax on active feature") {
  auto X = testing::random_matrix(10, 70);
  std::vector<double> y(10, 1.0);
  Forest flat = fit_forest(X, y, {0, 2, 5}, 5, 3);
  auto zero = feature_importance(flat);
  for (double v : zero) CHECK(v == 0.0);

  // y driven by feature 0; the rest is tiny noise
  auto X2 = testing::random_matrix(400, 71);
  std::vector<double> y2(X2.size());
  Rng rng(72);
  for (std::size_t i = 0; i < X2.size(); ++i)
    y2[i] = 4.0 * X2[i][0] + 1e-3 * rng.next_normal();
  Forest forest = fit_forest(X2, y2, {0, 5, 5}, 30, 4);
  auto imp = feature_importance(forest);
  double sum = 0.0;
  for (double v : imp) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(*std::max_element(imp.begin(), imp.end()) == imp[0]);
}

TEST_CASE("every accepted split has positive gain; leaf bounds hold") {
  auto X = testing::random_matrix(150, 80);
  auto y = testing::random_vector(150, 81);
  Forest forest = fit_forest(X, y, {0, 3, 5}, 10, 6);
  for (const auto& tree : forest.trees) {
    double leaf_min = std::numeric_limits<double>::infinity();
    double leaf_max = -leaf_min;
    for (const auto& node : tree.nodes) {
      if (node.feature >= 0) {
        CHECK(node.gain > 0.0);
      } else {
        leaf_min = std::min(leaf_min, node.value);
        leaf_max = std::max(leaf_max, node.value);
      }
    }
    auto queries = testing::random_matrix(20, 82);
    for (const auto& q : queries) {
      double p = predict_tree(tree, q);
      CHECK(p >= leaf_min);
      CHECK(p <= leaf_max);
    }
  }
}

TEST_CASE("leaf values are means of routed labels") {
  auto X = testing::random_matrix(40, 90);
  auto y = testing::random_vector(40, 91);
  RegressionTree tree = fit_tree(X, y, {0, 4, 15}, 1);
  // group samples by reached leaf, compare leaf value against group mean
  std::vector<std::vector<double>> routed(tree.nodes.size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    int id = 0;
    while (tree.nodes[static_cast<std::size_t>(id)].feature >= 0) {
      const auto& n = tree.nodes[static_cast<std::size_t>(id)];
      id = X[i][static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    routed[static_cast<std::size_t>(id)].push_back(y[i]);
  }
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    if (tree.nodes[id].feature >= 0 || routed[id].empty()) continue;
    double mean = 0.0;
    for (double v : routed[id]) mean += v;
    mean /= static_cast<double>(routed[id].size());
    CHECK(tree.nodes[id].value == doctest::Approx(mean).epsilon(1e-12));
  }
}

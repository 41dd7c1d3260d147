#include "popref/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "popref/errors.hpp"
#include "popref/parallel.hpp"
#include "popref/random.hpp"

namespace popref {

namespace {

void validate_params(const TreeParams& p) {
  if (p.max_depth < 0) throw Error("max_depth must be >= 0 (0 = unlimited)");
  if (p.min_samples_leaf < 1) throw Error("min_samples_leaf must be >= 1");
  if (p.features_per_split < 1 ||
      p.features_per_split > static_cast<int>(kFeatureCount))
    throw Error("features_per_split must be in [1, 15]");
}

void validate_data(std::span<const FeatureVector> X, std::span<const double> y) {
  if (X.empty()) throw EmptyData("fit: no samples");
  if (X.size() != y.size()) throw ShapeMismatch("fit: |X| != |y|");
  for (const auto& row : X)
    for (double v : row)
      if (!std::isfinite(v)) throw Error("fit: non-finite feature value");
  for (double v : y)
    if (!std::isfinite(v)) throw Error("fit: non-finite label");
}

struct BestSplit {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const FeatureVector> X, std::span<const double> y,
              const TreeParams& params, std::uint64_t seed,
              std::vector<int> indices)
      : X_(X), y_(y), params_(params), rng_(seed), idx_(std::move(indices)) {}

  // Preorder worklist entry; recursion depth would be the tree depth, which
  // unbounded splitting can push past the stack on large corpora.
  struct Work {
    int lo, hi, depth;
    int parent;  // -1 for the root
    bool is_left;
  };

  RegressionTree build() {
    RegressionTree tree;
    tree.nodes.reserve(2 * idx_.size());
    std::vector<Work> stack;
    stack.push_back({0, static_cast<int>(idx_.size()), 0, -1, false});
    while (!stack.empty()) {
      Work w = stack.back();
      stack.pop_back();
      int id = grow_node(tree, w.lo, w.hi, w.depth, stack);
      if (w.parent >= 0) {
        if (w.is_left)
          tree.nodes[static_cast<std::size_t>(w.parent)].left = id;
        else
          tree.nodes[static_cast<std::size_t>(w.parent)].right = id;
      }
    }
    return tree;
  }

 private:
  // Emits one node over idx_[lo, hi). On a split, partitions the range and
  // pushes the children (right first, so the left child pops next and node
  // ids keep preorder).
  int grow_node(RegressionTree& tree, int lo, int hi, int depth,
                std::vector<Work>& stack) {
    const int n = hi - lo;
    double sum = 0.0, y_min = y_[idx_[lo]], y_max = y_[idx_[lo]];
    for (int i = lo; i < hi; ++i) {
      double v = y_[idx_[i]];
      sum += v;
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
    const double mean = sum / n;

    const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
    BestSplit best;
    if (!depth_capped && n >= 2 * params_.min_samples_leaf && y_min < y_max)
      best = find_best_split(lo, hi, mean);

    int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[static_cast<std::size_t>(id)].value = mean;
    if (best.feature < 0) return id;  // leaf

    auto mid = std::stable_partition(
        idx_.begin() + lo, idx_.begin() + hi, [&](int i) {
          return X_[i][static_cast<std::size_t>(best.feature)] <= best.threshold;
        });
    int cut = static_cast<int>(mid - idx_.begin());

    TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.gain = best.gain;
    stack.push_back({cut, hi, depth + 1, id, false});
    stack.push_back({lo, cut, depth + 1, id, true});
    return id;
  }

  BestSplit find_best_split(int lo, int hi, double mean) {
    const int n = hi - lo;
    sample_features();

    BestSplit best;
    for (int f : feat_buf_) {
      sort_buf_.clear();
      for (int i = lo; i < hi; ++i)
        sort_buf_.emplace_back(X_[idx_[i]][static_cast<std::size_t>(f)],
                               y_[idx_[i]] - mean);
      std::stable_sort(sort_buf_.begin(), sort_buf_.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });

      // Labels are centered on the node mean, so total_c ~ 0 and the scan
      // below stays well conditioned.
      double total_c = 0.0;
      for (const auto& [v, c] : sort_buf_) total_c += c;
      const double base = total_c * total_c / n;

      double left_sum = 0.0;
      int left_n = 0;
      for (int i = 0; i + 1 < n;) {
        // advance over one group of equal feature values
        double v = sort_buf_[i].first;
        do {
          left_sum += sort_buf_[i].second;
          ++left_n;
          ++i;
        } while (i < n && sort_buf_[i].first == v);
        if (i >= n) break;
        int right_n = n - left_n;
        if (left_n < params_.min_samples_leaf || right_n < params_.min_samples_leaf)
          continue;
        double next = sort_buf_[i].first;
        double t = std::midpoint(v, next);
        if (!(v < t && t < next)) continue;  // adjacent representables
        double right_sum = total_c - left_sum;
        double gain =
            left_sum * left_sum / left_n + right_sum * right_sum / right_n - base;
        if (gain <= 0.0) continue;
        if (gain > best.gain ||
            (gain == best.gain &&
             (f < best.feature || (f == best.feature && t < best.threshold)))) {
          best = {gain, f, t};
        }
      }
    }
    return best;
  }

  // Draws features_per_split distinct feature indices, ascending.
  void sample_features() {
    int m = params_.features_per_split;
    if (m >= static_cast<int>(kFeatureCount)) {
      feat_buf_.resize(kFeatureCount);
      std::iota(feat_buf_.begin(), feat_buf_.end(), 0);
      return;
    }
    int pool[kFeatureCount];
    std::iota(pool, pool + kFeatureCount, 0);
    feat_buf_.clear();
    for (int j = 0; j < m; ++j) {
      int pick = j + static_cast<int>(rng_.next_below(kFeatureCount - j));
      std::swap(pool[j], pool[pick]);
      feat_buf_.push_back(pool[j]);
    }
    std::sort(feat_buf_.begin(), feat_buf_.end());
  }

  std::span<const FeatureVector> X_;
  std::span<const double> y_;
  TreeParams params_;
  Rng rng_;
  std::vector<int> idx_;
  std::vector<std::pair<double, double>> sort_buf_;
  std::vector<int> feat_buf_;
};

RegressionTree fit_tree_seeded(std::span<const FeatureVector> X,
                               std::span<const double> y, const TreeParams& params,
                               std::uint64_t seed, std::vector<int> indices) {
  TreeBuilder builder(X, y, params, seed, std::move(indices));
  return builder.build();
}

}  // namespace

RegressionTree fit_tree(std::span<const FeatureVector> X, std::span<const double> y,
                        const TreeParams& params, std::uint64_t seed) {
  validate_params(params);
  validate_data(X, y);
  std::vector<int> idx(X.size());
  std::iota(idx.begin(), idx.end(), 0);
  return fit_tree_seeded(X, y, params, seed, std::move(idx));
}

double predict_tree(const RegressionTree& tree, const FeatureVector& x) {
  int id = 0;
  while (tree.nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                     : node.right;
  }
  return tree.nodes[static_cast<std::size_t>(id)].value;
}

Forest fit_forest(std::span<const FeatureVector> X, std::span<const double> y,
                  const TreeParams& params, int tree_count, std::uint64_t seed,
                  unsigned threads, bool bootstrap) {
  validate_params(params);
  validate_data(X, y);
  if (tree_count < 1) throw Error("tree_count must be >= 1");

  Forest forest;
  forest.params = params;
  forest.tree_count = tree_count;
  forest.seed = seed;
  forest.trees.resize(static_cast<std::size_t>(tree_count));

  const std::size_t n = X.size();
  parallel_for(static_cast<std::size_t>(tree_count), threads, [&](std::size_t t) {
    // The builder always consumes the stream of tree_seed itself, so with
    // bootstrap disabled a 1-tree forest reproduces fit_tree(.., mix_seed(seed, 0)).
    std::uint64_t tree_seed = mix_seed(seed, t);
    std::vector<int> idx(n);
    if (bootstrap) {
      Rng rng(mix_seed(tree_seed, 0xB007ull));
      for (std::size_t i = 0; i < n; ++i)
        idx[i] = static_cast<int>(rng.next_below(n));
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    forest.trees[t] = fit_tree_seeded(X, y, params, tree_seed, std::move(idx));
  });
  return forest;
}

double predict_forest(const Forest& forest, const FeatureVector& x) {
  std::vector<double> outs;
  outs.reserve(forest.trees.size());
  for (const auto& tree : forest.trees) outs.push_back(predict_tree(tree, x));
  std::sort(outs.begin(), outs.end());
  double sum = 0.0;
  for (double v : outs) sum += v;
  return sum / static_cast<double>(outs.size());
}

std::vector<double> predict_forest_all(const Forest& forest,
                                       std::span<const FeatureVector> X) {
  std::vector<double> out;
  out.reserve(X.size());
  for (const auto& x : X) out.push_back(predict_forest(forest, x));
  return out;
}

std::array<double, kFeatureCount> feature_importance(const Forest& forest) {
  std::array<double, kFeatureCount> acc{};
  for (const auto& tree : forest.trees)
    for (const auto& node : tree.nodes)
      if (node.feature >= 0) acc[static_cast<std::size_t>(node.feature)] += node.gain;
  double total = 0.0;
  for (double v : acc) total += v;
  if (total <= 0.0) return acc;  // no splits anywhere
  for (double& v : acc) v /= total;
  return acc;
}

}  // namespace popref

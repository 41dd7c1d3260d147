#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "popref/preprocess.hpp"

namespace popref {

struct TreeParams {
  int max_depth = 0;           // 0 = unlimited
  int min_samples_leaf = 5;    // >= 1
  int features_per_split = 5;  // in [1, 15]

  bool operator==(const TreeParams&) const = default;
};

// Internal nodes carry (feature, threshold, children, split gain); leaves
// carry the mean label and feature == -1. Node 0 is the root.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double gain = 0.0;  // SSE decrease of this split; 0 for leaves
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
};

struct Forest {
  std::vector<RegressionTree> trees;
  TreeParams params;
  int tree_count = 0;
  std::uint64_t seed = 0;
};

// Greedy variance-reduction CART. Deterministic for fixed inputs: candidate
// thresholds are midpoints between consecutive distinct values, ties at the
// threshold route left, equal-gain ties resolve to the lowest feature index
// then the lowest threshold. Splitting stops at max_depth, min_samples_leaf,
// a constant-label node, or when no split has positive gain.
RegressionTree fit_tree(std::span<const FeatureVector> X, std::span<const double> y,
                        const TreeParams& params, std::uint64_t seed);

double predict_tree(const RegressionTree& tree, const FeatureVector& x);

// Bagged ensemble. Tree i is fit on a size-N bootstrap resample drawn from
// mix_seed(seed, i), so the result is independent of the thread schedule.
// `bootstrap = false` is a test hook that fits every tree on the full data.
Forest fit_forest(std::span<const FeatureVector> X, std::span<const double> y,
                  const TreeParams& params, int tree_count, std::uint64_t seed,
                  unsigned threads = 0, bool bootstrap = true);

// Mean of the per-tree predictions. The per-tree outputs are accumulated in
// sorted order so the result is invariant under tree permutation.
double predict_forest(const Forest& forest, const FeatureVector& x);

std::vector<double> predict_forest_all(const Forest& forest,
                                       std::span<const FeatureVector> X);

// Total SSE decrease per feature over all splits of all trees, normalized to
// sum to 1. All-zero when the forest contains no splits.
std::array<double, kFeatureCount> feature_importance(const Forest& forest);

}  // namespace popref

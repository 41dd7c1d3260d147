#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "popref/boosting.hpp"
#include "popref/forest.hpp"

namespace popref {

struct ForestConfig {
  TreeParams params;
  int tree_count = 100;
  bool bootstrap = true;

  bool operator==(const ForestConfig&) const = default;
};

struct RefineConfig {
  int k = 2;          // refinement iterations
  double t_y = 0.0;   // threshold as a fraction of max |residual|, in [0, 1]
  ForestConfig base;
  ForestConfig compensator;
  int boost_rounds = 50;
  std::uint64_t seed = 1;

  // k=4, t_y=0: strongest refinement, slowest to train.
  static RefineConfig effective();
  // k=1, t_y=0.25: compensate only the worst residues.
  static RefineConfig fast();

  bool operator==(const RefineConfig&) const = default;
};

// Residuals split into regular and larger residues at tau = t_y * max|R|.
struct ResidualLabels {
  std::vector<double> residuals;
  double tau = 0.0;
  std::vector<int> labels;  // +1 extreme, -1 regular
};

// One refinement stage. The gate is absent when t_y = 0 (every sample is
// compensated); the compensator is absent for a degenerate stage that had no
// extreme samples to fit, which contributes nothing at predict time.
struct RefineStage {
  std::optional<BoostClassifier> gate;
  std::optional<Forest> compensator;
};

struct StageTrace {
  double train_mse = 0.0;
  double tau = 0.0;
  std::size_t extreme_count = 0;
};

struct RefinementModel {
  Forest base;
  double base_train_mse = 0.0;
  std::vector<RefineStage> stages;       // size = config.k
  std::vector<StageTrace> training_trace;  // size = config.k
  RefineConfig config;
};

// R[j] = y[j] - p[j].
std::vector<double> compute_residuals(std::span<const double> y,
                                      std::span<const double> p);

// tau = t_y * max|R|; z = +1 iff |R| > tau, with two boundary adjustments:
// t_y = 0 labels everything +1 and t_y = 1 labels the argmax residues +1.
ResidualLabels threshold_labels(std::span<const double> residuals, double t_y);

// Fits the base forest, then k stages of (gate, residual compensator).
// Stage i fits on the samples whose current residual exceeds tau_i (recomputed
// from the running predictions each iteration) and updates those predictions
// in place; the gate only decides membership at predict time.
RefinementModel train_refinement(std::span<const FeatureVector> X,
                                 std::span<const double> y,
                                 const RefineConfig& config, unsigned threads = 0);

// base prediction plus every stage whose gate admits x (or that has no gate).
double refine_predict(const RefinementModel& model, const FeatureVector& x);

std::vector<double> refine_predict_all(const RefinementModel& model,
                                       std::span<const FeatureVector> X);

}  // namespace popref

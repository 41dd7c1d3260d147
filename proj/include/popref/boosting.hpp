#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "popref/preprocess.hpp"

namespace popref {

// Depth-1 weak learner. polarity is the label predicted on the x > threshold
// side; the other side gets -polarity.
struct Stump {
  int feature = 0;
  double threshold = 0.0;
  int polarity = 1;  // +1 or -1
};

inline int predict_stump(const Stump& s, const FeatureVector& x) {
  return x[static_cast<std::size_t>(s.feature)] > s.threshold ? s.polarity
                                                              : -s.polarity;
}

struct BoostStage {
  Stump stump;
  double alpha = 0.0;
};

struct BoostClassifier {
  std::vector<BoostStage> stages;
  int rounds = 0;
};

struct BoostPrediction {
  int label = 1;  // in {-1, +1}
  double margin = 0.0;
};

// Per-round diagnostics, filled when a trace pointer is passed to fit_boost.
struct BoostRound {
  double error = 0.0;
  double alpha = 0.0;
  double weight_sum = 0.0;
  double weight_min = 0.0;
};

// Minimizes weighted 0-1 loss over every (feature, threshold, polarity)
// candidate; thresholds are -inf plus midpoints of consecutive distinct
// values, so constant predictors are reachable. Weights must be
// non-negative and sum to 1 (+-1e-9). Returns the stump and its weighted
// error in [0, 1].
std::pair<Stump, double> fit_stump(std::span<const FeatureVector> X,
                                   std::span<const int> z,
                                   std::span<const double> w);

// Discrete AdaBoost over stumps: alpha_m = 0.5*ln((1-e)/e) with e clamped to
// [1e-10, 1-1e-10], weights renormalized each round, early stop on a perfect
// stump. Single-class input yields a one-stage constant classifier. The seed
// is kept for interface stability; the exhaustive stump search needs none.
BoostClassifier fit_boost(std::span<const FeatureVector> X, std::span<const int> z,
                          int rounds, std::uint64_t seed,
                          std::vector<BoostRound>* trace = nullptr);

// label = sign of the alpha-weighted stump vote; a zero margin maps to +1.
BoostPrediction predict_boost(const BoostClassifier& model, const FeatureVector& x);

}  // namespace popref

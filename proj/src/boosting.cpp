#include "popref/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "popref/errors.hpp"

namespace popref {

namespace {

constexpr double kEpsClamp = 1e-10;

void validate_labels(std::span<const int> z) {
  for (int v : z)
    if (v != 1 && v != -1) throw Error("labels must be in {-1, +1}");
}

bool better_candidate(double err, int feature, double threshold, int polarity,
                      double best_err, const Stump& best) {
  if (err < best_err) return true;
  if (err > best_err) return false;
  if (feature != best.feature) return feature < best.feature;
  if (threshold != best.threshold) return threshold < best.threshold;
  return polarity > best.polarity;  // +1 wins ties
}

}  // namespace

std::pair<Stump, double> fit_stump(std::span<const FeatureVector> X,
                                   std::span<const int> z,
                                   std::span<const double> w) {
  const std::size_t n = X.size();
  if (n == 0) throw EmptyData("fit_stump: no samples");
  if (z.size() != n || w.size() != n) throw ShapeMismatch("fit_stump: |X|, |z|, |w| differ");
  validate_labels(z);
  double wsum = 0.0;
  for (double v : w) {
    if (v < 0.0) throw InvalidWeights("fit_stump: negative weight");
    wsum += v;
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw InvalidWeights("fit_stump: weights must sum to 1");

  double w_pos = 0.0, w_neg = 0.0;  // per-class weight totals
  for (std::size_t i = 0; i < n; ++i) (z[i] == 1 ? w_pos : w_neg) += w[i];

  Stump best{0, -std::numeric_limits<double>::infinity(), 1};
  // threshold -inf, polarity +1 predicts +1 everywhere: error = weight of -1s
  double best_err = w_neg;
  if (better_candidate(w_pos, 0, best.threshold, -1, best_err, best)) {
    best.polarity = -1;
    best_err = w_pos;
  }

  std::vector<std::pair<double, std::size_t>> order(n);
  for (int f = 0; f < static_cast<int>(kFeatureCount); ++f) {
    for (std::size_t i = 0; i < n; ++i)
      order[i] = {X[i][static_cast<std::size_t>(f)], i};
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    // err(+1 polarity, t) = w{z=+1, x<=t} + w{z=-1, x>t}; scan group by group.
    double pos_below = 0.0, neg_below = 0.0;
    for (std::size_t i = 0; i + 1 < n;) {
      double v = order[i].first;
      do {
        if (z[order[i].second] == 1)
          pos_below += w[order[i].second];
        else
          neg_below += w[order[i].second];
        ++i;
      } while (i < n && order[i].first == v);
      if (i >= n) break;
      double next = order[i].first;
      double t = std::midpoint(v, next);
      if (!(v < t && t < next)) continue;
      double err_plus = pos_below + (w_neg - neg_below);
      double err_minus = neg_below + (w_pos - pos_below);
      if (better_candidate(err_plus, f, t, 1, best_err, best)) {
        best = {f, t, 1};
        best_err = err_plus;
      }
      if (better_candidate(err_minus, f, t, -1, best_err, best)) {
        best = {f, t, -1};
        best_err = err_minus;
      }
    }
  }
  return {best, std::clamp(best_err, 0.0, 1.0)};
}

BoostClassifier fit_boost(std::span<const FeatureVector> X, std::span<const int> z,
                          int rounds, std::uint64_t seed,
                          std::vector<BoostRound>* trace) {
  (void)seed;
  const std::size_t n = X.size();
  if (n == 0) throw EmptyData("fit_boost: no samples");
  if (z.size() != n) throw ShapeMismatch("fit_boost: |X| != |z|");
  if (rounds < 1) throw Error("fit_boost: rounds must be >= 1");
  validate_labels(z);

  BoostClassifier model;
  model.rounds = rounds;

  bool any_pos = false, any_neg = false;
  for (int v : z) (v == 1 ? any_pos : any_neg) = true;
  if (!any_pos || !any_neg) {
    // Degenerate gate: one class observed, predict it everywhere.
    Stump constant{0, -std::numeric_limits<double>::infinity(), any_pos ? 1 : -1};
    model.stages.push_back({constant, 1.0});
    return model;
  }

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  for (int m = 0; m < rounds; ++m) {
    auto [stump, eps] = fit_stump(X, z, w);
    if (eps >= 0.5) break;  // no edge left
    double eps_c = std::clamp(eps, kEpsClamp, 1.0 - kEpsClamp);
    double alpha = 0.5 * std::log((1.0 - eps_c) / eps_c);
    model.stages.push_back({stump, alpha});

    bool perfect = eps <= 0.0;
    if (!perfect) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        w[i] *= std::exp(-alpha * z[i] * predict_stump(stump, X[i]));
        sum += w[i];
      }
      for (double& v : w) v /= sum;
    }
    if (trace) {
      double wmin = *std::min_element(w.begin(), w.end());
      double wsum = std::accumulate(w.begin(), w.end(), 0.0);
      trace->push_back({eps, alpha, wsum, wmin});
    }
    if (perfect) break;  // the clamped alpha dominates all prior stages
  }
  return model;
}

BoostPrediction predict_boost(const BoostClassifier& model, const FeatureVector& x) {
  double margin = 0.0;
  for (const auto& stage : model.stages)
    margin += stage.alpha * predict_stump(stage.stump, x);
  return {margin >= 0.0 ? 1 : -1, margin};
}

}  // namespace popref

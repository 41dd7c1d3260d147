#include "popref/refine.hpp"

#include <algorithm>
#include <cmath>

#include "popref/errors.hpp"
#include "popref/random.hpp"

namespace popref {

namespace {

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

// Seed streams per component; stage indices start at 1.
constexpr std::uint64_t kBaseStream = 0x0Bull;
constexpr std::uint64_t kGateStream = 0x6A7Eull;
constexpr std::uint64_t kCompStream = 0xC04Full;

}  // namespace

RefineConfig RefineConfig::effective() {
  RefineConfig c;
  c.k = 4;
  c.t_y = 0.0;
  return c;
}

RefineConfig RefineConfig::fast() {
  RefineConfig c;
  c.k = 1;
  c.t_y = 0.25;
  return c;
}

std::vector<double> compute_residuals(std::span<const double> y,
                                      std::span<const double> p) {
  if (y.size() != p.size()) throw ShapeMismatch("compute_residuals: |y| != |p|");
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - p[i];
  return r;
}

ResidualLabels threshold_labels(std::span<const double> residuals, double t_y) {
  if (residuals.empty()) throw EmptyInput("threshold_labels: empty residual vector");
  if (!(t_y >= 0.0 && t_y <= 1.0)) throw Error("threshold_labels: t_y must be in [0, 1]");
  for (double r : residuals)
    if (!std::isfinite(r)) throw Error("threshold_labels: non-finite residual");

  double max_abs = 0.0;
  for (double r : residuals) max_abs = std::max(max_abs, std::abs(r));

  ResidualLabels out;
  out.residuals.assign(residuals.begin(), residuals.end());
  out.tau = t_y * max_abs;
  out.labels.resize(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    bool extreme;
    if (t_y == 0.0)
      extreme = true;  // compensate everything, zero residues included
    else if (t_y == 1.0)
      extreme = std::abs(residuals[i]) == max_abs;  // strict > would select nothing
    else
      extreme = std::abs(residuals[i]) > out.tau;
    out.labels[i] = extreme ? 1 : -1;
  }
  return out;
}

RefinementModel train_refinement(std::span<const FeatureVector> X,
                                 std::span<const double> y,
                                 const RefineConfig& config, unsigned threads) {
  if (X.size() < 2) throw EmptyData("train_refinement: need at least 2 samples");
  if (X.size() != y.size()) throw ShapeMismatch("train_refinement: |X| != |y|");
  if (config.k < 0) throw Error("train_refinement: k must be >= 0");
  if (!(config.t_y >= 0.0 && config.t_y <= 1.0))
    throw Error("train_refinement: t_y must be in [0, 1]");

  RefinementModel model;
  model.config = config;
  model.base = fit_forest(X, y, config.base.params, config.base.tree_count,
                          mix_seed(config.seed, kBaseStream), threads,
                          config.base.bootstrap);

  std::vector<double> pred = predict_forest_all(model.base, X);
  model.base_train_mse = mean_squared_error(pred, y);

  for (int stage_i = 1; stage_i <= config.k; ++stage_i) {
    std::vector<double> residuals = compute_residuals(y, pred);
    ResidualLabels labeled = threshold_labels(residuals, config.t_y);

    RefineStage stage;
    if (config.t_y > 0.0)
      stage.gate = fit_boost(X, labeled.labels, config.boost_rounds,
                             mix_seed(config.seed, kGateStream + static_cast<std::uint64_t>(stage_i)));

    std::vector<int> selected;
    for (std::size_t j = 0; j < labeled.labels.size(); ++j)
      if (labeled.labels[j] == 1) selected.push_back(static_cast<int>(j));

    if (selected.empty()) {
      // Degenerate stage: nothing crossed the threshold. The stage keeps its
      // gate but has no compensator, so it predicts as the identity and
      // aggressive t_y sweeps still complete.
      model.stages.push_back(std::move(stage));
      model.training_trace.push_back(
          {mean_squared_error(pred, y), labeled.tau, 0});
      continue;
    }

    std::vector<FeatureVector> sub_x;
    std::vector<double> sub_r;
    sub_x.reserve(selected.size());
    sub_r.reserve(selected.size());
    for (int j : selected) {
      sub_x.push_back(X[static_cast<std::size_t>(j)]);
      sub_r.push_back(residuals[static_cast<std::size_t>(j)]);
    }
    stage.compensator = fit_forest(
        sub_x, sub_r, config.compensator.params, config.compensator.tree_count,
        mix_seed(config.seed, kCompStream + static_cast<std::uint64_t>(stage_i)),
        threads, config.compensator.bootstrap);

    // Train-time updates follow the true labels, so the next iteration's
    // threshold reflects the residues that actually got compensated.
    for (int j : selected)
      pred[static_cast<std::size_t>(j)] +=
          predict_forest(*stage.compensator, X[static_cast<std::size_t>(j)]);

    model.training_trace.push_back(
        {mean_squared_error(pred, y), labeled.tau, selected.size()});
    model.stages.push_back(std::move(stage));
  }
  return model;
}

double refine_predict(const RefinementModel& model, const FeatureVector& x) {
  double p = predict_forest(model.base, x);
  for (const auto& stage : model.stages) {
    if (!stage.compensator) continue;
    if (stage.gate && predict_boost(*stage.gate, x).label != 1) continue;
    p += predict_forest(*stage.compensator, x);
  }
  return p;
}

std::vector<double> refine_predict_all(const RefinementModel& model,
                                       std::span<const FeatureVector> X) {
  std::vector<double> out;
  out.reserve(X.size());
  for (const auto& x : X) out.push_back(refine_predict(model, x));
  return out;
}

}  // namespace popref

#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "popref/refine.hpp"

namespace popref {

struct EvalReport {
  double rho = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;
  // set when either input to the rank correlation was constant (rho := 0)
  bool rho_degenerate = false;

  bool operator==(const EvalReport&) const = default;
};

struct SweepEntry {
  double value = 0.0;
  EvalReport report;
  double train_seconds = 0.0;
  double predict_seconds = 0.0;
};

struct SweepResult {
  std::string param;  // "k" or "ty"
  std::vector<SweepEntry> entries;
};

// Digitized train/test split, the input the sweep harness runs on.
struct SplitMatrices {
  std::vector<FeatureVector> x_train;
  std::vector<double> y_train;
  std::vector<FeatureVector> x_test;
  std::vector<double> y_test;
};

// 1-based fractional ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

// Pearson correlation of the average ranks (valid under ties). Constant
// input yields 0 and sets *degenerate when given.
double spearman_rho(std::span<const double> a, std::span<const double> b,
                    bool* degenerate = nullptr);

double mse(std::span<const double> a, std::span<const double> b);
double mae(std::span<const double> a, std::span<const double> b);

EvalReport evaluate_predictions(std::span<const double> y_true,
                                std::span<const double> y_pred);

// Least squares of y on [X | 1] with an optional ridge penalty, solved by
// Householder QR on the column-equilibrated system. Returns 15 slopes
// followed by the intercept.
std::array<double, 16> fit_linear(std::span<const FeatureVector> X,
                                  std::span<const double> y, double ridge);

double predict_linear(const std::array<double, 16>& w, const FeatureVector& x);

inline constexpr double kDefaultRidge = 1e-8;

// Default grids: k in {0..6} swept at t_y = 0, t_y over the eight standard
// fractions swept at k = 2.
inline constexpr std::array<int, 7> kDefaultKGrid = {0, 1, 2, 3, 4, 5, 6};
inline constexpr std::array<double, 8> kDefaultTyGrid = {0.00, 0.01, 0.03, 0.06,
                                                         0.12, 0.25, 0.50, 0.80};

// Trains one refinement model per grid value (entry i seeded with
// mix_seed(config.seed, i)), evaluates on the test half, records wall-clock
// timings. Grids must be strictly increasing.
SweepResult sweep_k(const SplitMatrices& split, const RefineConfig& config,
                    std::span<const int> k_values, unsigned threads = 0);
SweepResult sweep_ty(const SplitMatrices& split, const RefineConfig& config,
                     std::span<const double> ty_values, unsigned threads = 0);

// param,value,rho,mse,mae,train_s,predict_s
void write_sweep_csv(const SweepResult& result, std::ostream& out);

}  // namespace popref

#include "popref/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "popref/errors.hpp"
#include "popref/random.hpp"

namespace popref {

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw Error(std::string(what) + ": non-finite value");
}

bool is_constant(std::span<const double> v) {
  for (double x : v)
    if (x != v[0]) return false;
  return true;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
  if (v.empty()) throw EmptyInput("average_ranks: empty input");
  check_finite(v, "average_ranks");

  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    // positions i..j (0-based) share the mean of ranks i+1..j+1
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> a, std::span<const double> b,
                    bool* degenerate) {
  if (a.size() != b.size()) throw ShapeMismatch("spearman_rho: |a| != |b|");
  if (a.size() < 2) throw TooFewSamples("spearman_rho: need at least 2 samples");
  if (degenerate) *degenerate = false;
  if (is_constant(a) || is_constant(b)) {
    if (degenerate) *degenerate = true;
    return 0.0;  // rank correlation undefined; keep sweeps total
  }

  std::vector<double> ra = average_ranks(a);
  std::vector<double> rb = average_ranks(b);
  const std::size_t n = ra.size();

  // Identical or mirrored rank vectors are exactly +-1; return that without
  // a rounding trip through the general formula.
  bool same = true, mirrored = true;
  const double rank_sum = static_cast<double>(n) + 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    same = same && ra[i] == rb[i];
    mirrored = mirrored && ra[i] + rb[i] == rank_sum;
  }
  if (same) return 1.0;
  if (mirrored) return -1.0;

  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);

  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double xa = ra[i] - mean_a;
    double xb = rb[i] - mean_b;
    num += xa * xb;
    da += xa * xa;
    db += xb * xb;
  }
  return std::clamp(num / std::sqrt(da * db), -1.0, 1.0);
}

double mse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeMismatch("mse: |a| != |b|");
  if (a.empty()) throw EmptyInput("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double mae(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeMismatch("mae: |a| != |b|");
  if (a.empty()) throw EmptyInput("mae: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

EvalReport evaluate_predictions(std::span<const double> y_true,
                                std::span<const double> y_pred) {
  EvalReport report;
  report.rho = spearman_rho(y_true, y_pred, &report.rho_degenerate);
  report.mse = mse(y_true, y_pred);
  report.mae = mae(y_true, y_pred);
  report.n = y_true.size();
  return report;
}

std::array<double, 16> fit_linear(std::span<const FeatureVector> X,
                                  std::span<const double> y, double ridge) {
  constexpr std::size_t m = 16;
  const std::size_t n = X.size();
  if (n != y.size()) throw ShapeMismatch("fit_linear: |X| != |y|");
  if (ridge < 0.0) throw Error("fit_linear: ridge must be >= 0");
  if (ridge == 0.0 && n < m)
    throw TooFewSamples("fit_linear: need >= 16 samples when ridge = 0");

  // Column scales keep the QR well conditioned for raw-id magnitudes.
  std::array<double, m> scale;
  scale.fill(0.0);
  for (const auto& row : X)
    for (std::size_t j = 0; j + 1 < m; ++j)
      scale[j] = std::max(scale[j], std::abs(row[j]));
  scale[m - 1] = 1.0;  // intercept column
  for (double& s : scale)
    if (s == 0.0) s = 1.0;

  // Column-major [X/s | 1], with sqrt(ridge)/s_j rows appended so the
  // penalty matches ridge * ||w||^2 in the original variables.
  const std::size_t ridge_rows = ridge > 0.0 ? m : 0;
  const std::size_t rows = n + ridge_rows;
  std::vector<double> a(rows * m, 0.0);
  std::vector<double> rhs(rows, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j + 1 < m; ++j) a[j * rows + i] = X[i][j] / scale[j];
    a[(m - 1) * rows + i] = 1.0;
    rhs[i] = y[i];
  }
  const double sr = std::sqrt(ridge);
  for (std::size_t j = 0; j < ridge_rows; ++j) a[j * rows + n + j] = sr / scale[j];

  // Householder QR, applied to the rhs as it goes. Each column k is
  // overwritten with its reflector v; the R diagonal lives in rdiag.
  std::array<double, m> rdiag{};
  const double tiny = 1e-12 * std::sqrt(static_cast<double>(rows));
  for (std::size_t k = 0; k < m; ++k) {
    double* col = &a[k * rows];
    double sigma = 0.0;
    for (std::size_t i = k; i < rows; ++i) sigma += col[i] * col[i];
    sigma = std::sqrt(sigma);
    if (sigma < tiny)
      throw SingularSystem("fit_linear: rank-deficient design (column " +
                           std::to_string(k) + ")");
    double alpha = col[k] >= 0.0 ? -sigma : sigma;
    rdiag[k] = alpha;
    col[k] -= alpha;                              // v = x - alpha*e1
    double vtv = -2.0 * alpha * col[k];           // = ||v||^2, alpha has opposite sign
    auto reflect = [&](double* target) {
      double dot = 0.0;
      for (std::size_t i = k; i < rows; ++i) dot += col[i] * target[i];
      double f = 2.0 * dot / vtv;
      for (std::size_t i = k; i < rows; ++i) target[i] -= f * col[i];
    };
    for (std::size_t j = k + 1; j < m; ++j) reflect(&a[j * rows]);
    reflect(rhs.data());
  }

  // Back-substitution on the upper triangle.
  std::array<double, m> w{};
  for (std::size_t k = m; k-- > 0;) {
    double v = rhs[k];
    for (std::size_t j = k + 1; j < m; ++j) v -= a[j * rows + k] * w[j];
    if (std::abs(rdiag[k]) < tiny)
      throw SingularSystem("fit_linear: rank-deficient design");
    w[k] = v / rdiag[k];
  }
  for (std::size_t j = 0; j < m; ++j) w[j] /= scale[j];
  return w;
}

double predict_linear(const std::array<double, 16>& w, const FeatureVector& x) {
  double acc = w[15];
  for (std::size_t j = 0; j < kFeatureCount; ++j) acc += w[j] * x[j];
  return acc;
}

namespace {

SweepEntry run_sweep_entry(const SplitMatrices& split, RefineConfig config,
                           double value, unsigned threads) {
  SweepEntry entry;
  entry.value = value;

  auto t0 = std::chrono::steady_clock::now();
  RefinementModel model =
      train_refinement(split.x_train, split.y_train, config, threads);
  entry.train_seconds = elapsed_seconds(t0);

  auto t1 = std::chrono::steady_clock::now();
  std::vector<double> pred = refine_predict_all(model, split.x_test);
  entry.predict_seconds = elapsed_seconds(t1);

  entry.report = evaluate_predictions(split.y_test, pred);
  return entry;
}

template <typename T>
void check_grid(std::span<const T> values) {
  if (values.empty()) throw EmptyInput("sweep: empty grid");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] > values[i - 1]))
      throw Error("sweep: grid must be strictly increasing");
}

}  // namespace

SweepResult sweep_k(const SplitMatrices& split, const RefineConfig& config,
                    std::span<const int> k_values, unsigned threads) {
  check_grid(k_values);
  SweepResult result;
  result.param = "k";
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    RefineConfig c = config;
    c.k = k_values[i];
    c.seed = mix_seed(config.seed, i);
    result.entries.push_back(
        run_sweep_entry(split, c, static_cast<double>(k_values[i]), threads));
  }
  return result;
}

SweepResult sweep_ty(const SplitMatrices& split, const RefineConfig& config,
                     std::span<const double> ty_values, unsigned threads) {
  check_grid(ty_values);
  SweepResult result;
  result.param = "ty";
  for (std::size_t i = 0; i < ty_values.size(); ++i) {
    RefineConfig c = config;
    c.t_y = ty_values[i];
    c.seed = mix_seed(config.seed, i);
    result.entries.push_back(run_sweep_entry(split, c, ty_values[i], threads));
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "param,value,rho,mse,mae,train_s,predict_s\n";
  char line[256];
  for (const auto& e : result.entries) {
    std::snprintf(line, sizeof(line), "%s,%.10g,%.10g,%.10g,%.10g,%.4f,%.4f\n",
                  result.param.c_str(), e.value, e.report.rho, e.report.mse,
                  e.report.mae, e.train_seconds, e.predict_seconds);
    out << line;
  }
}

}  // namespace popref

// popref — train, evaluate and sweep the residual-refinement regressor on
// post-metadata datasets. See README.md for the data formats.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "popref/dataset.hpp"
#include "popref/errors.hpp"
#include "popref/eval.hpp"
#include "popref/model_io.hpp"

namespace {

using namespace popref;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitModel = 4;

struct DataOptions {
  std::string path;
  std::string format = "tsv";
  std::string column_map_path;
};

struct SplitOptions {
  std::string mode = "random";
  std::size_t test_count = 0;  // 0 = ~1.8% of the corpus
  std::uint64_t seed = 1;
};

struct ModelOptions {
  int k = 2;
  double ty = 0.0;
  std::string text_mode = "textlen";
  int trees = 100;
  int comp_trees = 0;  // 0 = same as --trees
  int max_depth = 0;
  int min_leaf = 5;
  int features_per_split = 5;
  int comp_min_leaf = 0;            // 0 = same as --min-leaf
  int comp_features_per_split = 0;  // 0 = same as --features-per-split
  int boost_rounds = 50;
  unsigned threads = 0;
};

void add_data_options(CLI::App* cmd, DataOptions& opt) {
  cmd->add_option("--data", opt.path, "input dataset")->required();
  cmd->add_option("--format", opt.format, "input format")
      ->check(CLI::IsMember({"tsv", "jsonl"}))
      ->capture_default_str();
  cmd->add_option("--column-map", opt.column_map_path,
                  "file of 'file_column = schema_column' renames");
}

void add_split_options(CLI::App* cmd, SplitOptions& opt) {
  cmd->add_option("--split", opt.mode, "train/test partition mode")
      ->check(CLI::IsMember({"random", "time"}))
      ->capture_default_str();
  cmd->add_option("--test-count", opt.test_count,
                  "test set size (default: ~1.8% of the corpus)");
  cmd->add_option("--seed", opt.seed, "master seed")->capture_default_str();
}

void add_model_options(CLI::App* cmd, ModelOptions& opt) {
  cmd->add_option("--k", opt.k, "refinement iterations")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--ty", opt.ty, "residue threshold fraction in [0,1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--text-mode", opt.text_mode, "title/tags featurization")
      ->check(CLI::IsMember({"wordcount", "textlen"}))
      ->capture_default_str();
  cmd->add_option("--trees", opt.trees, "trees per forest")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--comp-trees", opt.comp_trees,
                  "trees per compensator forest (default: --trees)");
  cmd->add_option("--max-depth", opt.max_depth, "tree depth cap, 0 = unlimited")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--min-leaf", opt.min_leaf, "min samples per leaf")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--features-per-split", opt.features_per_split,
                  "features considered per split")
      ->check(CLI::Range(1, 15))
      ->capture_default_str();
  cmd->add_option("--comp-min-leaf", opt.comp_min_leaf,
                  "compensator min samples per leaf (default: --min-leaf)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--comp-features-per-split", opt.comp_features_per_split,
                  "compensator features per split (default: --features-per-split)")
      ->check(CLI::Range(0, 15));
  cmd->add_option("--boost-rounds", opt.boost_rounds, "AdaBoost rounds per gate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--threads", opt.threads, "worker threads, 0 = all cores")
      ->capture_default_str();
}

DataFormat parse_format(const std::string& f) {
  return f == "tsv" ? DataFormat::TSV : DataFormat::JSONL;
}

TextFeatureMode parse_text_mode(const std::string& m) {
  return m == "wordcount" ? TextFeatureMode::WordCount : TextFeatureMode::TextLength;
}

RefineConfig make_config(const ModelOptions& opt, std::uint64_t seed) {
  RefineConfig cfg;
  cfg.k = opt.k;
  cfg.t_y = opt.ty;
  cfg.seed = seed;
  cfg.boost_rounds = opt.boost_rounds;
  cfg.base.params = {opt.max_depth, opt.min_leaf, opt.features_per_split};
  cfg.base.tree_count = opt.trees;
  cfg.compensator.params = cfg.base.params;
  if (opt.comp_min_leaf > 0)
    cfg.compensator.params.min_samples_leaf = opt.comp_min_leaf;
  if (opt.comp_features_per_split > 0)
    cfg.compensator.params.features_per_split = opt.comp_features_per_split;
  cfg.compensator.tree_count = opt.comp_trees > 0 ? opt.comp_trees : opt.trees;
  return cfg;
}

Dataset load_with_warnings(const DataOptions& opt) {
  ColumnMap map;
  if (!opt.column_map_path.empty()) map = load_column_map(opt.column_map_path);
  LoadResult loaded = load_dataset(opt.path, parse_format(opt.format), map);
  std::size_t total = 0;
  for (const auto& [field, count] : loaded.warnings) total += count;
  std::cerr << "loaded " << loaded.dataset.size() << " records from " << opt.path;
  if (total > 0) {
    std::cerr << " (" << total << " malformed cells:";
    for (const auto& [field, count] : loaded.warnings)
      std::cerr << " " << field << "=" << count;
    std::cerr << ")";
  }
  std::cerr << "\n";
  return std::move(loaded.dataset);
}

SplitSpec make_split_spec(const SplitOptions& opt, std::size_t n) {
  SplitSpec spec;
  spec.mode = opt.mode == "time" ? SplitMode::TimeOrderSetB : SplitMode::RandomSetA;
  spec.test_count = opt.test_count > 0 ? opt.test_count : default_test_count(n);
  spec.seed = opt.seed;
  return spec;
}

SplitMatrices digitize_split(const Dataset& train, const Dataset& test,
                             const EncodingMaps& maps, TextFeatureMode mode) {
  SplitMatrices m;
  m.x_train = digitize_all(train.records, maps, mode);
  m.y_train = train.labels();
  m.x_test = digitize_all(test.records, maps, mode);
  m.y_test = test.labels();
  return m;
}

void print_report_row(const char* name, const EvalReport& r) {
  std::printf("%-22s %10.6f %12.6f %12.6f\n", name, r.rho, r.mse, r.mae);
}

// ---------------------------------------------------------------- commands

int cmd_synth(const std::string& out, std::size_t n, std::uint64_t seed,
              double tail_frac, double tail_scale, double noise,
              const std::string& format) {
  SynthConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.tail_frac = tail_frac;
  cfg.tail_scale = tail_scale;
  cfg.noise_scale = noise;
  Dataset data = generate_synthetic(cfg);
  write_dataset(data, out, parse_format(format));
  std::cerr << "wrote " << data.size() << " records to " << out << "\n";
  return 0;
}

int cmd_train(const DataOptions& data_opt, const SplitOptions& split_opt,
              const ModelOptions& model_opt, const std::string& model_out) {
  Dataset data = load_with_warnings(data_opt);
  SplitSpec spec = make_split_spec(split_opt, data.size());
  auto [train, test] = split(data, spec);
  std::cerr << "split: " << split_opt.mode << " train=" << train.size()
            << " test=" << test.size() << " seed=" << split_opt.seed << "\n";

  TextFeatureMode mode = parse_text_mode(model_opt.text_mode);
  EncodingMaps maps = fit_encoding_maps(train.records);
  SplitMatrices m = digitize_split(train, test, maps, mode);

  RefineConfig cfg = make_config(model_opt, split_opt.seed);
  RefinementModel model =
      train_refinement(m.x_train, m.y_train, cfg, model_opt.threads);

  std::printf("stage  %12s %12s %10s\n", "train_mse", "tau", "extremes");
  std::printf("base   %12.6f %12s %10s\n", model.base_train_mse, "-", "-");
  for (std::size_t i = 0; i < model.training_trace.size(); ++i) {
    const StageTrace& t = model.training_trace[i];
    std::printf("%-6zu %12.6f %12.6f %10zu\n", i + 1, t.train_mse, t.tau,
                t.extreme_count);
  }

  std::array<double, 16> w = fit_linear(m.x_train, m.y_train, kDefaultRidge);
  std::vector<double> linear_pred;
  linear_pred.reserve(m.x_test.size());
  for (const auto& x : m.x_test) linear_pred.push_back(predict_linear(w, x));

  std::vector<double> base_pred = predict_forest_all(model.base, m.x_test);
  std::vector<double> refined_pred = refine_predict_all(model, m.x_test);

  std::printf("%-22s %10s %12s %12s\n", "method", "rho", "mse", "mae");
  print_report_row("linear regression", evaluate_predictions(m.y_test, linear_pred));
  print_report_row("base forest", evaluate_predictions(m.y_test, base_pred));
  char label[64];
  std::snprintf(label, sizeof(label), "refined (k=%d, ty=%g)", cfg.k, cfg.t_y);
  print_report_row(label, evaluate_predictions(m.y_test, refined_pred));

  ModelBundle bundle{std::move(model), std::move(maps), mode};
  save_model(bundle, model_out);
  std::ofstream summary(model_out + ".json");
  summary << model_summary_json(bundle) << "\n";
  std::cerr << "model written to " << model_out << " (+ .json summary)\n";
  return 0;
}

int cmd_predict(const DataOptions& data_opt, const std::string& model_path,
                const std::string& out_path) {
  ModelBundle bundle = load_model(model_path);
  Dataset data = load_with_warnings(data_opt);
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot open for writing: " + out_path);
  out << "id,prediction\n";
  char line[80];
  for (const auto& rec : data.records) {
    double p = refine_predict(bundle.model, digitize(rec, bundle.maps, bundle.mode));
    std::snprintf(line, sizeof(line), "%lld,%.17g\n",
                  static_cast<long long>(rec.pid), p);
    out << line;
  }
  if (!out) throw IoError("write failed: " + out_path);
  std::cerr << "wrote " << data.size() << " predictions to " << out_path << "\n";
  return 0;
}

int cmd_evaluate(const DataOptions& data_opt, const std::string& model_path,
                 const std::string& csv_path, const std::string& textlen_csv) {
  ModelBundle bundle = load_model(model_path);
  Dataset data = load_with_warnings(data_opt);
  std::vector<double> y = data.labels();
  std::vector<double> pred;
  pred.reserve(data.size());
  for (const auto& rec : data.records)
    pred.push_back(refine_predict(bundle.model, digitize(rec, bundle.maps, bundle.mode)));

  EvalReport r = evaluate_predictions(y, pred);
  std::printf("metric %12s\n", "value");
  std::printf("rho    %12.6f%s\n", r.rho, r.rho_degenerate ? "  (degenerate)" : "");
  std::printf("mse    %12.6f\n", r.mse);
  std::printf("mae    %12.6f\n", r.mae);
  std::printf("n      %12zu\n", r.n);

  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot open for writing: " + csv_path);
    char line[128];
    std::snprintf(line, sizeof(line), "rho,mse,mae,n\n%.10g,%.10g,%.10g,%zu\n",
                  r.rho, r.mse, r.mae, r.n);
    csv << line;
  }
  if (!textlen_csv.empty()) {
    // title text-length vs score table, for plotting the score distribution
    std::ofstream csv(textlen_csv);
    if (!csv) throw IoError("cannot open for writing: " + textlen_csv);
    csv << "title_textlen,label\n";
    for (const auto& rec : data.records)
      csv << text_length(rec.title) << "," << *rec.label << "\n";
  }
  return 0;
}

int cmd_importance(const std::string& model_path) {
  ModelBundle bundle = load_model(model_path);
  auto imp = feature_importance(bundle.model.base);
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    std::printf("%-12s %.6f\n", std::string(kFeatureNames[f]).c_str(), imp[f]);
  return 0;
}

int cmd_sweep(const DataOptions& data_opt, const SplitOptions& split_opt,
              const ModelOptions& model_opt, const std::string& param,
              std::vector<double> grid, const std::string& out_path) {
  Dataset data = load_with_warnings(data_opt);
  SplitSpec spec = make_split_spec(split_opt, data.size());
  auto [train, test] = split(data, spec);

  TextFeatureMode mode = parse_text_mode(model_opt.text_mode);
  EncodingMaps maps = fit_encoding_maps(train.records);
  SplitMatrices m = digitize_split(train, test, maps, mode);

  RefineConfig cfg = make_config(model_opt, split_opt.seed);
  SweepResult result;
  if (param == "k") {
    std::vector<int> ks;
    if (grid.empty()) {
      ks.assign(kDefaultKGrid.begin(), kDefaultKGrid.end());
    } else {
      for (double v : grid) ks.push_back(static_cast<int>(v));
      std::sort(ks.begin(), ks.end());
      ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    }
    cfg.t_y = model_opt.ty;  // sweeping k holds t_y fixed
    result = sweep_k(m, cfg, ks, model_opt.threads);
  } else {
    std::vector<double> tys(grid);
    if (tys.empty()) tys.assign(kDefaultTyGrid.begin(), kDefaultTyGrid.end());
    std::sort(tys.begin(), tys.end());
    tys.erase(std::unique(tys.begin(), tys.end()), tys.end());
    cfg.k = model_opt.k;  // sweeping t_y holds k fixed
    result = sweep_ty(m, cfg, tys, model_opt.threads);
  }

  std::ofstream out(out_path);
  if (!out) throw IoError("cannot open for writing: " + out_path);
  write_sweep_csv(result, out);
  write_sweep_csv(result, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"popularity-score regression with iterative residual refinement"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command-line flags win");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset")->configurable()->fallthrough();
  std::size_t synth_n = 0;
  std::uint64_t synth_seed = 1;
  double tail_frac = 0.05, tail_scale = 1.0, noise = 0.5;
  std::string synth_out, synth_format = "tsv";
  synth->add_option("--n", synth_n, "record count")
      ->required()
      ->check(CLI::Range(std::size_t{2}, std::size_t{100000000}));
  synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  synth->add_option("--tail-frac", tail_frac, "share of viral users")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth->add_option("--tail-scale", tail_scale, "viral multiplier spread")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth->add_option("--noise", noise, "gaussian label noise scale")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth->add_option("--format", synth_format, "output format")
      ->check(CLI::IsMember({"tsv", "jsonl"}))
      ->capture_default_str();
  synth->add_option("--out", synth_out, "output path")->required();

  // train
  auto* train = app.add_subcommand("train", "fit and save a refinement model")->configurable()->fallthrough();
  DataOptions train_data;
  SplitOptions train_split;
  ModelOptions train_model;
  std::string model_out;
  add_data_options(train, train_data);
  add_split_options(train, train_split);
  add_model_options(train, train_model);
  train->add_option("--model-out", model_out, "model file to write")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "write id,prediction CSV")->configurable()->fallthrough();
  DataOptions predict_data;
  std::string predict_model, predict_out;
  add_data_options(predict, predict_data);
  predict->add_option("--model", predict_model, "model file")->required();
  predict->add_option("--out", predict_out, "output CSV path")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score a model on labeled data")->configurable()->fallthrough();
  DataOptions eval_data;
  std::string eval_model, eval_csv, eval_textlen_csv;
  add_data_options(evaluate, eval_data);
  evaluate->add_option("--model", eval_model, "model file")->required();
  evaluate->add_option("--csv", eval_csv, "also write metrics as CSV");
  evaluate->add_option("--textlen-csv", eval_textlen_csv,
                       "write title text-length vs label table");

  // importance
  auto* importance = app.add_subcommand("importance", "base-forest feature importance")->configurable()->fallthrough();
  std::string imp_model;
  importance->add_option("--model", imp_model, "model file")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "grid-sweep k or t_y")->configurable()->fallthrough();
  DataOptions sweep_data;
  SplitOptions sweep_split;
  ModelOptions sweep_model;
  std::string sweep_param, sweep_out;
  std::vector<double> sweep_grid;
  add_data_options(sweep, sweep_data);
  add_split_options(sweep, sweep_split);
  add_model_options(sweep, sweep_model);
  sweep->add_option("--param", sweep_param, "parameter to sweep")
      ->check(CLI::IsMember({"k", "ty"}))
      ->required();
  sweep->add_option("--grid", sweep_grid, "comma-separated grid values")->delimiter(',');
  sweep->add_option("--out", sweep_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth->parsed())
      return cmd_synth(synth_out, synth_n, synth_seed, tail_frac, tail_scale,
                       noise, synth_format);
    if (train->parsed())
      return cmd_train(train_data, train_split, train_model, model_out);
    if (predict->parsed()) return cmd_predict(predict_data, predict_model, predict_out);
    if (evaluate->parsed())
      return cmd_evaluate(eval_data, eval_model, eval_csv, eval_textlen_csv);
    if (importance->parsed()) return cmd_importance(imp_model);
    if (sweep->parsed())
      return cmd_sweep(sweep_data, sweep_split, sweep_model, sweep_param,
                       sweep_grid, sweep_out);
  } catch (const ModelFileError& e) {
    std::cerr << "model-file error: " << e.what() << "\n";
    return kExitModel;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

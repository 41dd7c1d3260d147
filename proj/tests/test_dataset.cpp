#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "popref/dataset.hpp"
#include "popref/errors.hpp"
#include "popref/eval.hpp"
#include "support/oracles.hpp"

using namespace popref;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  out << contents;
}

const char* kHeader =
    "uid\tpid\tcategory\tsubcategory\tconcept\tpathalias\tispublic\t"
    "mediastatus\ttitle\tmediatype\talltags\tpostdate\tlatitude\t"
    "geoaccuracy\tlongitude\tlabel\n";

}  // namespace

TEST_CASE("load_dataset: well-formed TSV") {
  std::string path = temp_path("popref_ok.tsv");
  write_file(path, std::string(kHeader) +
                       "7\t100\tfood\tdessert\tmacro\talice\t1\tready\thello "
                       "world\tphoto\tcake sugar\t1400000000\t25.5\t12\t121.5\t3.5\n"
                       "8\t101\tpets\tcats\tcloseup\t\t0\tready\t\tvideo\t\t"
                       "1400000100\t\t\t\t2.25\n");
  LoadResult r = load_dataset(path, DataFormat::TSV);
  CHECK(r.dataset.size() == 2);
  CHECK(r.warnings.empty());
  CHECK(r.dataset.records[0].uid == 7);
  CHECK(r.dataset.records[0].is_public);
  CHECK(r.dataset.records[0].latitude == 25.5);
  CHECK(r.dataset.records[0].label == 3.5);
  CHECK(!r.dataset.records[1].latitude.has_value());
  CHECK(!r.dataset.records[1].is_public);
  CHECK(r.dataset.records[1].title.empty());
  std::remove(path.c_str());
}

TEST_CASE("load_dataset: malformed numeric becomes absent plus a warning") {
  std::string path = temp_path("popref_warn.tsv");
  write_file(path, std::string(kHeader) +
                       "7\t100\tfood\tdessert\tmacro\ta\t1\tready\tt\tphoto\tx\t"
                       "1400000000\tabc\t12\t121.5\t3.5\n");
  LoadResult r = load_dataset(path, DataFormat::TSV);
  CHECK(r.dataset.size() == 1);
  CHECK(!r.dataset.records[0].latitude.has_value());
  CHECK(r.warnings.at("latitude") == 1);
  std::remove(path.c_str());
}

TEST_CASE("load_dataset: schema and file errors") {
  CHECK_THROWS_AS(load_dataset(temp_path("popref_missing.tsv"), DataFormat::TSV),
                  FileNotFound);

  std::string empty = temp_path("popref_empty.tsv");
  write_file(empty, "");
  CHECK_THROWS_AS(load_dataset(empty, DataFormat::TSV), EmptyFile);
  std::remove(empty.c_str());

  std::string missing_col = temp_path("popref_nocol.tsv");
  write_file(missing_col, "uid\tpid\tcategory\n1\t2\tfood\n");
  CHECK_THROWS_AS(load_dataset(missing_col, DataFormat::TSV), SchemaMismatch);
  std::remove(missing_col.c_str());

  std::string ragged = temp_path("popref_ragged.tsv");
  write_file(ragged, std::string(kHeader) + "7\t100\tfood\n");
  CHECK_THROWS_AS(load_dataset(ragged, DataFormat::TSV), ParseError);
  std::remove(ragged.c_str());
}

TEST_CASE("load_dataset: column map bridges foreign headers") {
  std::string data = temp_path("popref_mapped.tsv");
  std::string header =
      "user_id\tpid\tcategory\tsubcategory\tconcept\tpathalias\tispublic\t"
      "mediastatus\ttitle\tmediatype\talltags\tpostdate\tlatitude\t"
      "geoaccuracy\tlongitude\n";
  write_file(data, header +
                       "7\t100\tfood\tdessert\tmacro\ta\t1\tready\tt\tphoto\tx\t"
                       "1400000000\t25.5\t12\t121.5\n");
  CHECK_THROWS_AS(load_dataset(data, DataFormat::TSV), SchemaMismatch);

  std::string map_path = temp_path("popref_map.txt");
  write_file(map_path, "# rename\nuser_id = uid\n");
  ColumnMap map = load_column_map(map_path);
  LoadResult r = load_dataset(data, DataFormat::TSV, map);
  CHECK(r.dataset.records[0].uid == 7);
  CHECK(!r.dataset.records[0].label.has_value());
  std::remove(data.c_str());
  std::remove(map_path.c_str());
}

TEST_CASE("TSV and JSONL round trips agree") {
  SynthConfig cfg;
  cfg.n = 100;
  cfg.seed = 12;
  Dataset data = generate_synthetic(cfg);

  std::string tsv = temp_path("popref_rt.tsv");
  std::string jsonl = temp_path("popref_rt.jsonl");
  write_dataset(data, tsv, DataFormat::TSV);
  write_dataset(data, jsonl, DataFormat::JSONL);
  Dataset from_tsv = load_dataset(tsv, DataFormat::TSV).dataset;
  Dataset from_jsonl = load_dataset(jsonl, DataFormat::JSONL).dataset;
  CHECK(from_tsv == data);
  CHECK(from_jsonl == data);
  CHECK(from_tsv == from_jsonl);

  // idempotence: re-serializing a loaded file reproduces it
  std::string tsv2 = temp_path("popref_rt2.tsv");
  write_dataset(from_tsv, tsv2, DataFormat::TSV);
  Dataset again = load_dataset(tsv2, DataFormat::TSV).dataset;
  CHECK(again == from_tsv);
  for (const auto& p : {tsv, jsonl, tsv2}) std::remove(p.c_str());
}

TEST_CASE("split: time order takes the latest post_dates, stable on ties") {
  Dataset data;
  // post_dates with duplicates; labels mark the original index
  std::vector<std::int64_t> dates = {50, 10, 50, 40, 20, 60, 60, 30, 15, 25};
  for (std::size_t i = 0; i < dates.size(); ++i) {
    RawRecord r;
    r.pid = static_cast<std::int64_t>(i);
    r.post_date = dates[i];
    r.label = static_cast<double>(i);
    data.records.push_back(r);
  }
  auto [train, test] = split(data, {SplitMode::TimeOrderSetB, 3, 0});
  REQUIRE(test.size() == 3);
  // largest dates are 50(idx2, the later duplicate), 60(idx5), 60(idx6)
  CHECK(test.records[0].pid == 2);
  CHECK(test.records[1].pid == 5);
  CHECK(test.records[2].pid == 6);
  CHECK(train.size() == 7);
}

TEST_CASE("split: random mode reproducible and partition-complete") {
  SynthConfig cfg;
  cfg.n = 60;
  cfg.seed = 5;
  Dataset data = generate_synthetic(cfg);

  auto [train_a, test_a] = split(data, {SplitMode::RandomSetA, 13, 99});
  auto [train_b, test_b] = split(data, {SplitMode::RandomSetA, 13, 99});
  CHECK(train_a == train_b);
  CHECK(test_a == test_b);

  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    SplitSpec spec;
    spec.mode = rng.next_bool(0.5) ? SplitMode::RandomSetA : SplitMode::TimeOrderSetB;
    spec.test_count = 1 + rng.next_below(data.size() - 1);
    spec.seed = rng.next_u64();
    auto [train, test] = split(data, spec);
    CHECK(train.size() + test.size() == data.size());
    std::multiset<std::int64_t> seen;
    for (const auto& r : train.records) seen.insert(r.pid);
    for (const auto& r : test.records) seen.insert(r.pid);
    std::multiset<std::int64_t> original;
    for (const auto& r : data.records) original.insert(r.pid);
    CHECK(seen == original);
  }
}

TEST_CASE("split validation") {
  SynthConfig cfg;
  cfg.n = 10;
  Dataset data = generate_synthetic(cfg);
  CHECK_THROWS_AS(split(data, {SplitMode::RandomSetA, 10, 0}), TestCountTooLarge);
  CHECK_THROWS_AS(split(data, {SplitMode::RandomSetA, 0, 0}), TestCountTooLarge);
  Dataset unlabeled = data;
  unlabeled.records[3].label.reset();
  CHECK_THROWS_AS(split(unlabeled, {SplitMode::RandomSetA, 2, 0}), MissingLabels);
}

TEST_CASE("default_test_count tracks the reference proportion") {
  CHECK(default_test_count(305614) == 5501);  // ~1.8%
  CHECK(default_test_count(100) == 2);
  CHECK(default_test_count(2) == 1);
}

TEST_CASE("generate_synthetic: noiseless tail-free labels are exactly linear") {
  SynthConfig cfg;
  cfg.n = 400;
  cfg.seed = 21;
  cfg.noise_scale = 0.0;
  cfg.tail_frac = 0.0;
  Dataset data = generate_synthetic(cfg);

  EncodingMaps maps = fit_encoding_maps(data.records);
  auto X = digitize_all(data.records, maps, TextFeatureMode::TextLength);
  auto y = data.labels();
  auto w = fit_linear(X, y, 0.0);
  double max_err = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i)
    max_err = std::max(max_err, std::abs(predict_linear(w, X[i]) - y[i]));
  CHECK(max_err <= 1e-6);
  // identifiable active coefficients recover exactly
  CHECK(w[0] == doctest::Approx(cfg.coefficients[0]).epsilon(1e-6));
  CHECK(w[2] == doctest::Approx(cfg.coefficients[2]).epsilon(1e-6));
  CHECK(w[6] == doctest::Approx(cfg.coefficients[6]).epsilon(1e-6));
  CHECK(w[8] == doctest::Approx(cfg.coefficients[8]).epsilon(1e-6));
  CHECK(w[10] == doctest::Approx(cfg.coefficients[10]).epsilon(1e-6));
}

TEST_CASE("generate_synthetic: deterministic and tail produces extreme scores") {
  SynthConfig cfg;
  cfg.n = 5000;
  cfg.seed = 31;
  Dataset a = generate_synthetic(cfg);
  Dataset b = generate_synthetic(cfg);
  CHECK(a == b);

  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    SynthConfig tail_cfg;
    tail_cfg.n = 5000;
    tail_cfg.seed = seed;
    tail_cfg.tail_frac = 0.05;
    Dataset data = generate_synthetic(tail_cfg);
    std::vector<double> labels = data.labels();
    std::vector<double> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    double p95 = sorted[static_cast<std::size_t>(0.95 * (sorted.size() - 1))];
    double max = sorted.back();
    CHECK(max >= 5.0 * p95);
  }
}

TEST_CASE("generate_synthetic: field shapes") {
  SynthConfig cfg;
  cfg.n = 300;
  cfg.seed = 8;
  Dataset data = generate_synthetic(cfg);
  REQUIRE(data.size() == 300);
  std::int64_t prev_date = -1;
  std::int64_t prev_pid = -1;
  for (const auto& r : data.records) {
    CHECK(r.post_date > prev_date);
    CHECK(r.pid > prev_pid);
    prev_date = r.post_date;
    prev_pid = r.pid;
    CHECK(!r.category.empty());
    CHECK(r.label.has_value());
    CHECK(r.latitude.has_value() == r.longitude.has_value());
  }
  CHECK_THROWS_AS(generate_synthetic(SynthConfig{}), Error);  // n = 0
}

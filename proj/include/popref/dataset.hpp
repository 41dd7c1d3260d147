#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "popref/preprocess.hpp"

namespace popref {

struct Dataset {
  std::vector<RawRecord> records;
  std::string provenance;

  std::size_t size() const { return records.size(); }
  bool has_labels() const;
  // Labels aligned by index; throws MissingLabels if any record lacks one.
  std::vector<double> labels() const;

  bool operator==(const Dataset& other) const { return records == other.records; }
};

enum class DataFormat { TSV, JSONL };

enum class SplitMode { RandomSetA, TimeOrderSetB };

struct SplitSpec {
  SplitMode mode = SplitMode::RandomSetA;
  std::size_t test_count = 0;
  std::uint64_t seed = 0;  // RandomSetA only
};

struct LoadResult {
  Dataset dataset;
  // per-field count of malformed cells that were dropped to absent/default
  std::map<std::string, std::size_t> warnings;
};

// Optional rename map for files whose headers differ from the canonical
// schema: file column name -> canonical name. Unmapped names pass through.
using ColumnMap = std::map<std::string, std::string>;

// Lines of "file_name = canonical_name"; '#' starts a comment.
ColumnMap load_column_map(const std::string& path);

// Parses the 15-column schema (plus optional "label"). Malformed numeric
// cells become absent markers and are counted per field; a missing required
// column raises SchemaMismatch.
LoadResult load_dataset(const std::string& path, DataFormat format,
                        const ColumnMap& column_map = {});

void write_dataset(const Dataset& dataset, const std::string& path,
                   DataFormat format);

// RandomSetA: seeded Fisher-Yates permutation, last test_count entries are
// the test set. TimeOrderSetB: stable ascending post_date order, the
// largest-date test_count entries are the test set.
std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec);

// Default test size: ~1.8% of the corpus, at least 1.
std::size_t default_test_count(std::size_t n);

struct SynthConfig {
  std::size_t n = 0;
  std::uint64_t seed = 1;
  // label = coefficients . digitize(record) before noise and tail scaling
  std::array<double, kFeatureCount> coefficients = default_coefficients();
  double noise_scale = 0.5;
  double tail_frac = 0.05;   // fraction of users given a viral multiplier
  double tail_scale = 1.0;   // spread of the log-normal multiplier

  static std::array<double, kFeatureCount> default_coefficients();
};

// Deterministic corpus with the 15-field shapes of real post metadata.
// Labels are linear in the digitized features (TextLength mode) plus
// Gaussian noise; a tail_frac share of users carries a log-normal "viral"
// multiplier, so extreme scores exist and are predictable from the metadata.
Dataset generate_synthetic(const SynthConfig& config);

}  // namespace popref

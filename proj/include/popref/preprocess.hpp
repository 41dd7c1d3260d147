#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace popref {

inline constexpr std::size_t kFeatureCount = 15;

// Feature schema order. Shared by digitization, the dataset loaders and the
// CLI importance table.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "uid",      "pid",       "category",  "subcategory", "concept",
    "pathalias", "ispublic", "mediastatus", "title",     "mediatype",
    "alltags",  "postdate",  "latitude",  "geoaccuracy", "longitude"};

using FeatureVector = std::array<double, kFeatureCount>;

// One post's metadata. Text fields default to empty; the three geo fields
// and the label may be absent.
struct RawRecord {
  std::int64_t uid = 0;
  std::int64_t pid = 0;
  std::string category;
  std::string subcategory;
  std::string concept_text;
  std::string path_alias;
  bool is_public = false;
  std::string media_status;
  std::string title;
  std::string media_type;
  std::string all_tags;
  std::int64_t post_date = 0;  // seconds since epoch, non-negative
  std::optional<double> latitude;
  std::optional<double> geo_accuracy;
  std::optional<double> longitude;
  std::optional<double> label;

  bool operator==(const RawRecord&) const = default;
};

enum class TextFeatureMode { WordCount, TextLength };

// value -> dense id, ids assigned in first-occurrence order.
class ValueEncoder {
 public:
  // Inserts the value if unseen; returns its id either way.
  int fit_value(const std::string& value);

  // Fitted id, or the sentinel `size()` for unseen values.
  int encode(const std::string& value) const;

  int size() const { return static_cast<int>(ids_.size()); }

  // (value, id) pairs sorted by id; used by serialization.
  std::vector<std::pair<std::string, int>> entries_by_id() const;

  void restore(const std::string& value, int id) { ids_.emplace(value, id); }

 private:
  std::unordered_map<std::string, int> ids_;
};

struct EncodingMaps {
  ValueEncoder category;
  ValueEncoder subcategory;
  ValueEncoder concept_text;
};

// First-occurrence index of each element among the distinct values.
// ["a","b","a","c"] -> [0,1,0,2]
std::vector<int> unique_id_convert(std::span<const std::string> values);

// Fits the category/subcategory/concept dictionaries over a corpus.
// Throws EmptyCorpus when no records are given.
EncodingMaps fit_encoding_maps(std::span<const RawRecord> records);

// Number of Unicode scalar values in a UTF-8 string.
std::size_t text_length(std::string_view text);

// Number of maximal runs of non-whitespace characters.
std::size_t word_count(std::string_view text);

// Maps a record onto the fixed 15-component schema. Total: unseen
// categorical values encode to the sentinel id, absent geo fields to 0.0.
FeatureVector digitize(const RawRecord& record, const EncodingMaps& maps,
                       TextFeatureMode mode);

std::vector<FeatureVector> digitize_all(std::span<const RawRecord> records,
                                        const EncodingMaps& maps,
                                        TextFeatureMode mode);

}  // namespace popref

#include "popref/preprocess.hpp"

#include <algorithm>

#include "popref/errors.hpp"

namespace popref {

int ValueEncoder::fit_value(const std::string& value) {
  auto it = ids_.find(value);
  if (it != ids_.end()) return it->second;
  int id = static_cast<int>(ids_.size());
  ids_.emplace(value, id);
  return id;
}

int ValueEncoder::encode(const std::string& value) const {
  auto it = ids_.find(value);
  return it != ids_.end() ? it->second : static_cast<int>(ids_.size());
}

std::vector<std::pair<std::string, int>> ValueEncoder::entries_by_id() const {
  std::vector<std::pair<std::string, int>> out(ids_.begin(), ids_.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  return out;
}

std::vector<int> unique_id_convert(std::span<const std::string> values) {
  ValueEncoder enc;
  std::vector<int> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(enc.fit_value(v));
  return out;
}

EncodingMaps fit_encoding_maps(std::span<const RawRecord> records) {
  if (records.empty()) throw EmptyCorpus("fit_encoding_maps: no records");
  EncodingMaps maps;
  for (const auto& r : records) {
    maps.category.fit_value(r.category);
    maps.subcategory.fit_value(r.subcategory);
    maps.concept_text.fit_value(r.concept_text);
  }
  return maps;
}

std::size_t text_length(std::string_view text) {
  // Count non-continuation bytes; robust against the corpus's mixed languages.
  std::size_t n = 0;
  for (unsigned char c : text)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

namespace {
bool is_ws(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
}  // namespace

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_ws(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

FeatureVector digitize(const RawRecord& record, const EncodingMaps& maps,
                       TextFeatureMode mode) {
  auto text_feat = [mode](const std::string& s) {
    return mode == TextFeatureMode::WordCount
               ? static_cast<double>(word_count(s))
               : static_cast<double>(text_length(s));
  };
  FeatureVector f{};
  f[0] = static_cast<double>(record.uid);
  f[1] = static_cast<double>(record.pid);
  f[2] = static_cast<double>(maps.category.encode(record.category));
  f[3] = static_cast<double>(maps.subcategory.encode(record.subcategory));
  f[4] = static_cast<double>(maps.concept_text.encode(record.concept_text));
  f[5] = static_cast<double>(text_length(record.path_alias));
  f[6] = record.is_public ? 1.0 : 0.0;
  f[7] = static_cast<double>(text_length(record.media_status));
  f[8] = text_feat(record.title);
  f[9] = static_cast<double>(text_length(record.media_type));
  f[10] = text_feat(record.all_tags);
  f[11] = static_cast<double>(record.post_date);
  f[12] = record.latitude.value_or(0.0);
  f[13] = record.geo_accuracy.value_or(0.0);
  f[14] = record.longitude.value_or(0.0);
  return f;
}

std::vector<FeatureVector> digitize_all(std::span<const RawRecord> records,
                                        const EncodingMaps& maps,
                                        TextFeatureMode mode) {
  std::vector<FeatureVector> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(digitize(r, maps, mode));
  return out;
}

}  // namespace popref

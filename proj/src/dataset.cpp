#include "popref/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "popref/errors.hpp"
#include "popref/random.hpp"

namespace popref {

using nlohmann::json;

bool Dataset::has_labels() const {
  for (const auto& r : records)
    if (!r.label) return false;
  return !records.empty();
}

std::vector<double> Dataset::labels() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.label) throw MissingLabels();
    out.push_back(*r.label);
  }
  return out;
}

namespace {

constexpr const char* kLabelColumn = "label";

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Counts malformed cells per canonical field name.
struct WarningSink {
  std::map<std::string, std::size_t>* counts;
  void add(std::string_view field) { ++(*counts)[std::string(field)]; }
};

std::optional<double> parse_real(const std::string& cell, std::string_view field,
                                 WarningSink& warn) {
  std::string t = trim(cell);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) {
    warn.add(field);
    return std::nullopt;
  }
  return v;
}

std::int64_t parse_int(const std::string& cell, std::string_view field,
                       bool non_negative, WarningSink& warn) {
  std::string t = trim(cell);
  if (t.empty()) return 0;
  char* end = nullptr;
  long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size()) {
    warn.add(field);
    return 0;
  }
  if (non_negative && v < 0) {
    warn.add(field);
    return 0;
  }
  return v;
}

bool parse_bool(const std::string& cell, std::string_view field, WarningSink& warn) {
  std::string t = trim(cell);
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t.empty() || t == "0" || t == "false") return false;
  if (t == "1" || t == "true") return true;
  warn.add(field);
  return false;
}

// Assigns one already-parsed cell into the record slot `field` points at.
void assign_field(RawRecord& rec, std::size_t field, const std::string& cell,
                  WarningSink& warn) {
  switch (field) {
    case 0: rec.uid = parse_int(cell, kFeatureNames[0], false, warn); break;
    case 1: rec.pid = parse_int(cell, kFeatureNames[1], false, warn); break;
    case 2: rec.category = cell; break;
    case 3: rec.subcategory = cell; break;
    case 4: rec.concept_text = cell; break;
    case 5: rec.path_alias = cell; break;
    case 6: rec.is_public = parse_bool(cell, kFeatureNames[6], warn); break;
    case 7: rec.media_status = cell; break;
    case 8: rec.title = cell; break;
    case 9: rec.media_type = cell; break;
    case 10: rec.all_tags = cell; break;
    case 11: rec.post_date = parse_int(cell, kFeatureNames[11], true, warn); break;
    case 12: rec.latitude = parse_real(cell, kFeatureNames[12], warn); break;
    case 13: rec.geo_accuracy = parse_real(cell, kFeatureNames[13], warn); break;
    case 14: rec.longitude = parse_real(cell, kFeatureNames[14], warn); break;
    default: break;
  }
}

std::string map_name(const std::string& name, const ColumnMap& column_map) {
  auto it = column_map.find(name);
  return it != column_map.end() ? it->second : name;
}

int schema_index(const std::string& canonical) {
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    if (canonical == kFeatureNames[i]) return static_cast<int>(i);
  if (canonical == kLabelColumn) return static_cast<int>(kFeatureCount);
  return -1;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

LoadResult load_tsv(std::istream& in, const std::string& path,
                    const ColumnMap& column_map) {
  LoadResult result;
  WarningSink warn{&result.warnings};

  std::string line;
  if (!std::getline(in, line)) throw EmptyFile(path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header = split_tabs(line);
  std::vector<int> column_field(header.size(), -1);
  std::array<bool, kFeatureCount> seen{};
  for (std::size_t c = 0; c < header.size(); ++c) {
    int f = schema_index(map_name(trim(header[c]), column_map));
    column_field[c] = f;
    if (f >= 0 && f < static_cast<int>(kFeatureCount))
      seen[static_cast<std::size_t>(f)] = true;
  }
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    if (!seen[f])
      throw SchemaMismatch(path + ": missing column '" +
                           std::string(kFeatureNames[f]) + "'");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_tabs(line);
    if (cells.size() != header.size())
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " columns, got " +
                       std::to_string(cells.size()));
    RawRecord rec;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      int f = column_field[c];
      if (f < 0) continue;
      if (f == static_cast<int>(kFeatureCount))
        rec.label = parse_real(cells[c], kLabelColumn, warn);
      else
        assign_field(rec, static_cast<std::size_t>(f), cells[c], warn);
    }
    result.dataset.records.push_back(std::move(rec));
  }
  result.dataset.provenance = path;
  return result;
}

std::string json_text(const json& v, std::string_view field, WarningSink& warn) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  if (v.is_number() || v.is_boolean()) return v.dump();
  warn.add(field);
  return "";
}

std::optional<double> json_real(const json& v, std::string_view field,
                                WarningSink& warn) {
  if (v.is_null()) return std::nullopt;
  if (v.is_number()) {
    double d = v.get<double>();
    if (!std::isfinite(d)) {
      warn.add(field);
      return std::nullopt;
    }
    return d;
  }
  if (v.is_string()) return parse_real(v.get<std::string>(), field, warn);
  warn.add(field);
  return std::nullopt;
}

std::int64_t json_int(const json& v, std::string_view field, bool non_negative,
                      WarningSink& warn) {
  if (v.is_null()) return 0;
  if (v.is_number_integer()) {
    std::int64_t i = v.get<std::int64_t>();
    if (non_negative && i < 0) {
      warn.add(field);
      return 0;
    }
    return i;
  }
  if (v.is_string()) return parse_int(v.get<std::string>(), field, non_negative, warn);
  warn.add(field);
  return 0;
}

bool json_bool(const json& v, std::string_view field, WarningSink& warn) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_null()) return false;
  if (v.is_number()) return v.get<double>() != 0.0;
  if (v.is_string()) return parse_bool(v.get<std::string>(), field, warn);
  warn.add(field);
  return false;
}

LoadResult load_jsonl(std::istream& in, const std::string& path,
                      const ColumnMap& column_map) {
  LoadResult result;
  WarningSink warn{&result.warnings};

  std::string line;
  std::size_t line_no = 0;
  bool schema_checked = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object())
      throw ParseError(path + ":" + std::to_string(line_no) + ": not a JSON object");

    json canon = json::object();
    for (auto it = obj.begin(); it != obj.end(); ++it)
      canon[map_name(it.key(), column_map)] = it.value();

    if (!schema_checked) {
      for (auto name : kFeatureNames)
        if (!canon.contains(name))
          throw SchemaMismatch(path + ": missing key '" + std::string(name) + "'");
      schema_checked = true;
    }

    RawRecord rec;
    auto get = [&](std::string_view name) -> const json& {
      static const json null_value;
      auto it = canon.find(name);
      return it != canon.end() ? *it : null_value;
    };
    rec.uid = json_int(get("uid"), "uid", false, warn);
    rec.pid = json_int(get("pid"), "pid", false, warn);
    rec.category = json_text(get("category"), "category", warn);
    rec.subcategory = json_text(get("subcategory"), "subcategory", warn);
    rec.concept_text = json_text(get("concept"), "concept", warn);
    rec.path_alias = json_text(get("pathalias"), "pathalias", warn);
    rec.is_public = json_bool(get("ispublic"), "ispublic", warn);
    rec.media_status = json_text(get("mediastatus"), "mediastatus", warn);
    rec.title = json_text(get("title"), "title", warn);
    rec.media_type = json_text(get("mediatype"), "mediatype", warn);
    rec.all_tags = json_text(get("alltags"), "alltags", warn);
    rec.post_date = json_int(get("postdate"), "postdate", true, warn);
    rec.latitude = json_real(get("latitude"), "latitude", warn);
    rec.geo_accuracy = json_real(get("geoaccuracy"), "geoaccuracy", warn);
    rec.longitude = json_real(get("longitude"), "longitude", warn);
    if (canon.contains(kLabelColumn))
      rec.label = json_real(canon[kLabelColumn], kLabelColumn, warn);
    result.dataset.records.push_back(std::move(rec));
  }
  if (line_no == 0) throw EmptyFile(path);
  result.dataset.provenance = path;
  return result;
}

std::string sanitize_tsv(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return out;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_tsv(const Dataset& dataset, std::ostream& out) {
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    out << kFeatureNames[i] << '\t';
  out << kLabelColumn << '\n';
  for (const auto& r : dataset.records) {
    out << r.uid << '\t' << r.pid << '\t' << sanitize_tsv(r.category) << '\t'
        << sanitize_tsv(r.subcategory) << '\t' << sanitize_tsv(r.concept_text)
        << '\t' << sanitize_tsv(r.path_alias) << '\t' << (r.is_public ? 1 : 0)
        << '\t' << sanitize_tsv(r.media_status) << '\t' << sanitize_tsv(r.title)
        << '\t' << sanitize_tsv(r.media_type) << '\t' << sanitize_tsv(r.all_tags)
        << '\t' << r.post_date << '\t'
        << (r.latitude ? format_real(*r.latitude) : "") << '\t'
        << (r.geo_accuracy ? format_real(*r.geo_accuracy) : "") << '\t'
        << (r.longitude ? format_real(*r.longitude) : "") << '\t'
        << (r.label ? format_real(*r.label) : "") << '\n';
  }
}

void write_jsonl(const Dataset& dataset, std::ostream& out) {
  for (const auto& r : dataset.records) {
    json obj;
    obj["uid"] = r.uid;
    obj["pid"] = r.pid;
    obj["category"] = r.category;
    obj["subcategory"] = r.subcategory;
    obj["concept"] = r.concept_text;
    obj["pathalias"] = r.path_alias;
    obj["ispublic"] = r.is_public;
    obj["mediastatus"] = r.media_status;
    obj["title"] = r.title;
    obj["mediatype"] = r.media_type;
    obj["alltags"] = r.all_tags;
    obj["postdate"] = r.post_date;
    obj["latitude"] = r.latitude ? json(*r.latitude) : json();
    obj["geoaccuracy"] = r.geo_accuracy ? json(*r.geo_accuracy) : json();
    obj["longitude"] = r.longitude ? json(*r.longitude) : json();
    obj["label"] = r.label ? json(*r.label) : json();
    out << obj.dump() << '\n';
  }
}

}  // namespace

ColumnMap load_column_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path);
  ColumnMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 'file_column = schema_column'");
    map[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return map;
}

LoadResult load_dataset(const std::string& path, DataFormat format,
                        const ColumnMap& column_map) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path);
  if (in.peek() == std::ifstream::traits_type::eof()) throw EmptyFile(path);
  return format == DataFormat::TSV ? load_tsv(in, path, column_map)
                                   : load_jsonl(in, path, column_map);
}

void write_dataset(const Dataset& dataset, const std::string& path,
                   DataFormat format) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  if (format == DataFormat::TSV)
    write_tsv(dataset, out);
  else
    write_jsonl(dataset, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec) {
  const std::size_t n = dataset.size();
  if (spec.test_count < 1 || spec.test_count >= n)
    throw TestCountTooLarge("split: test_count must be in [1, n-1], got " +
                            std::to_string(spec.test_count) + " of " +
                            std::to_string(n));
  if (!dataset.has_labels()) throw MissingLabels("split: dataset has no labels");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (spec.mode == SplitMode::RandomSetA) {
    Rng rng(spec.seed);
    for (std::size_t i = n - 1; i > 0; --i) {
      std::size_t j = rng.next_below(i + 1);
      std::swap(order[i], order[j]);
    }
  } else {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return dataset.records[a].post_date < dataset.records[b].post_date;
    });
  }

  Dataset train, test;
  train.provenance = dataset.provenance + "#train";
  test.provenance = dataset.provenance + "#test";
  const std::size_t cut = n - spec.test_count;
  train.records.reserve(cut);
  test.records.reserve(spec.test_count);
  for (std::size_t i = 0; i < cut; ++i) train.records.push_back(dataset.records[order[i]]);
  for (std::size_t i = cut; i < n; ++i) test.records.push_back(dataset.records[order[i]]);
  return {std::move(train), std::move(test)};
}

std::size_t default_test_count(std::size_t n) {
  auto count = static_cast<std::size_t>(std::llround(0.018 * static_cast<double>(n)));
  if (count < 1) count = 1;
  if (n > 1 && count > n - 1) count = n - 1;
  return count;
}

std::array<double, kFeatureCount> SynthConfig::default_coefficients() {
  // uid carries a small positive weight so per-user level differences are
  // part of the signal, mirroring how strongly author identity drives scores.
  //      uid   pid  cat  subc conc alias publ stat title type tags date lat  acc  lon
  return {2e-5, 0.0, 0.4, 0.15, 0.1, 0.05, 1.5, 0.1, 0.15, 0.3, 0.04, 0.0, 0.0, 0.05, 0.0};
}

namespace {

const char* kCategories[] = {"animals", "architecture", "art",    "food",
                             "landscape", "people",     "sports", "travel"};
const char* kSubcategories[] = {
    "birds",  "cats",    "dogs",     "bridges", "castles", "painting", "street",
    "dessert", "seafood", "mountain", "coast",  "forest",  "portrait", "crowd",
    "soccer", "cycling", "running",  "city",    "island",  "roadtrip"};
const char* kConcepts[] = {
    "sunset",  "closeup", "vintage", "macro",   "night",   "aerial",
    "minimal", "pastel",  "neon",    "rustic",  "golden",  "monochrome",
    "candid",  "festival", "market", "harbor",  "garden",  "museum",
    "stadium", "trail",   "summit",  "lagoon",  "desert",  "glacier",
    "temple",  "bazaar",  "alley",   "rooftop", "meadow",  "reef"};
const char* kWords[] = {
    "light",  "shadow", "morning", "winter",  "river",  "stone",  "cloud",
    "window", "bright", "quiet",   "hidden",  "ancient", "modern", "empty",
    "blue",   "red",    "green",   "soft",    "wild",    "lost",   "small",
    "grand",  "old",    "new",     "long",    "deep",    "high",   "open",
    "warm",   "cold",   "first",   "last",    "north",   "south",  "east",
    "west",   "spring", "autumn",  "harvest", "journey", "memory", "moment",
    "street", "corner", "bridge",  "tower",   "field",   "valley", "shore",
    "wave",   "storm",  "mist",    "dawn",    "dusk",    "frame",  "focus",
    "color",  "detail", "texture", "pattern"};

std::string random_words(Rng& rng, std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i) out += ' ';
    out += kWords[rng.next_below(std::size(kWords))];
  }
  return out;
}

std::string random_token(Rng& rng, std::size_t len) {
  std::string out;
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i)
    out += static_cast<char>('a' + rng.next_below(26));
  return out;
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& config) {
  if (config.n < 2) throw Error("generate_synthetic: n must be >= 2");
  if (config.noise_scale < 0.0) throw Error("generate_synthetic: noise_scale must be >= 0");
  if (!(config.tail_frac >= 0.0 && config.tail_frac <= 1.0))
    throw Error("generate_synthetic: tail_frac must be in [0, 1]");

  const std::size_t user_count = std::max<std::size_t>(2, config.n / 25);
  Rng rng(mix_seed(config.seed, 0x5EC0ull));

  Dataset data;
  data.provenance = "synth:seed=" + std::to_string(config.seed);
  data.records.reserve(config.n);

  std::vector<std::size_t> user_of(config.n);
  std::int64_t pid = 10007;
  std::int64_t ts = 1400000000;
  for (std::size_t i = 0; i < config.n; ++i) {
    RawRecord r;
    user_of[i] = rng.next_below(user_count);
    r.uid = 100000 + 997 * static_cast<std::int64_t>(user_of[i]);
    pid += 5 + static_cast<std::int64_t>(rng.next_below(7));
    r.pid = pid;
    r.category = kCategories[rng.next_below(std::size(kCategories))];
    r.subcategory = kSubcategories[rng.next_below(std::size(kSubcategories))];
    r.concept_text = kConcepts[rng.next_below(std::size(kConcepts))];
    r.path_alias = rng.next_bool(0.30) ? "" : random_token(rng, 4 + rng.next_below(11));
    r.is_public = rng.next_bool(0.90);
    double status_draw = rng.next_unit();
    r.media_status = status_draw < 0.90 ? "ready" : (status_draw < 0.97 ? "pending" : "failed");
    r.title = random_words(rng, rng.next_below(13));
    double type_draw = rng.next_unit();
    r.media_type = type_draw < 0.80 ? "photo" : (type_draw < 0.95 ? "video" : "gif");
    r.all_tags = random_words(rng, rng.next_below(26));
    ts += 1800 + static_cast<std::int64_t>(rng.next_below(7200));
    r.post_date = ts;
    if (rng.next_bool(0.40)) {
      r.latitude = rng.next_in(-55.0, 70.0);
      r.longitude = rng.next_in(-179.0, 179.0);
      r.geo_accuracy = static_cast<double>(1 + rng.next_below(16));
    }
    data.records.push_back(std::move(r));
  }

  // Viral users: a tail_frac share of users whose posts carry a log-normal
  // multiplier. Tying the tail to uid keeps extreme scores predictable from
  // the metadata, which is the regime the refinement stages target.
  const auto viral_count = static_cast<std::size_t>(
      std::llround(config.tail_frac * static_cast<double>(user_count)));
  Rng tail_rng(mix_seed(config.seed, 0x7A11ull));
  std::vector<std::size_t> user_order(user_count);
  std::iota(user_order.begin(), user_order.end(), 0);
  for (std::size_t i = user_count - 1; i > 0; --i) {
    std::size_t j = tail_rng.next_below(i + 1);
    std::swap(user_order[i], user_order[j]);
  }
  std::vector<double> multiplier(user_count, 1.0);
  for (std::size_t v = 0; v < viral_count && v < user_count; ++v)
    multiplier[user_order[v]] =
        std::exp(1.0 + config.tail_scale * std::abs(tail_rng.next_normal()));

  EncodingMaps maps = fit_encoding_maps(data.records);
  Rng noise_rng(mix_seed(config.seed, 0x401FEull));
  for (std::size_t i = 0; i < config.n; ++i) {
    FeatureVector x = digitize(data.records[i], maps, TextFeatureMode::TextLength);
    double lin = 0.0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) lin += config.coefficients[f] * x[f];
    double noise = config.noise_scale == 0.0 ? 0.0
                                             : config.noise_scale * noise_rng.next_normal();
    data.records[i].label = (lin + noise) * multiplier[user_of[i]];
  }
  return data;
}

}  // namespace popref

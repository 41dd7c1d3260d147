#include "popref/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "popref/errors.hpp"

namespace popref {

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

const std::array<std::uint32_t, 256> kCrcTable = make_crc_table();

// Little-endian primitive writer over a growing byte buffer.
class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    buf_.append(s);
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    std::uint64_t n = u64();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > buf_.size() - pos_) throw IoError("model payload truncated");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

void put_tree_params(Writer& w, const TreeParams& p) {
  w.i32(p.max_depth);
  w.i32(p.min_samples_leaf);
  w.i32(p.features_per_split);
}

TreeParams get_tree_params(Reader& r) {
  TreeParams p;
  p.max_depth = r.i32();
  p.min_samples_leaf = r.i32();
  p.features_per_split = r.i32();
  return p;
}

void put_forest(Writer& w, const Forest& f) {
  put_tree_params(w, f.params);
  w.i32(f.tree_count);
  w.u64(f.seed);
  w.u64(f.trees.size());
  for (const auto& tree : f.trees) {
    w.u64(tree.nodes.size());
    for (const auto& n : tree.nodes) {
      w.i32(n.feature);
      w.f64(n.threshold);
      w.i32(n.left);
      w.i32(n.right);
      w.f64(n.value);
      w.f64(n.gain);
    }
  }
}

Forest get_forest(Reader& r) {
  Forest f;
  f.params = get_tree_params(r);
  f.tree_count = r.i32();
  f.seed = r.u64();
  f.trees.resize(r.u64());
  for (auto& tree : f.trees) {
    tree.nodes.resize(r.u64());
    for (auto& n : tree.nodes) {
      n.feature = r.i32();
      n.threshold = r.f64();
      n.left = r.i32();
      n.right = r.i32();
      n.value = r.f64();
      n.gain = r.f64();
    }
  }
  return f;
}

void put_boost(Writer& w, const BoostClassifier& b) {
  w.i32(b.rounds);
  w.u64(b.stages.size());
  for (const auto& s : b.stages) {
    w.i32(s.stump.feature);
    w.f64(s.stump.threshold);
    w.i32(s.stump.polarity);
    w.f64(s.alpha);
  }
}

BoostClassifier get_boost(Reader& r) {
  BoostClassifier b;
  b.rounds = r.i32();
  b.stages.resize(r.u64());
  for (auto& s : b.stages) {
    s.stump.feature = r.i32();
    s.stump.threshold = r.f64();
    s.stump.polarity = r.i32();
    s.alpha = r.f64();
  }
  return b;
}

void put_forest_config(Writer& w, const ForestConfig& c) {
  put_tree_params(w, c.params);
  w.i32(c.tree_count);
  w.u8(c.bootstrap ? 1 : 0);
}

ForestConfig get_forest_config(Reader& r) {
  ForestConfig c;
  c.params = get_tree_params(r);
  c.tree_count = r.i32();
  c.bootstrap = r.u8() != 0;
  return c;
}

void put_encoder(Writer& w, const ValueEncoder& enc) {
  auto entries = enc.entries_by_id();
  w.u64(entries.size());
  for (const auto& [value, id] : entries) {
    w.str(value);
    w.i32(id);
  }
}

ValueEncoder get_encoder(Reader& r) {
  ValueEncoder enc;
  std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string value = r.str();
    enc.restore(value, r.i32());
  }
  return enc;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t size) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < size; ++i) c = kCrcTable[(c ^ p[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

std::string serialize_bundle(const ModelBundle& bundle) {
  Writer w;
  w.u8(bundle.mode == TextFeatureMode::WordCount ? 0 : 1);

  const RefineConfig& cfg = bundle.model.config;
  w.i32(cfg.k);
  w.f64(cfg.t_y);
  put_forest_config(w, cfg.base);
  put_forest_config(w, cfg.compensator);
  w.i32(cfg.boost_rounds);
  w.u64(cfg.seed);

  put_encoder(w, bundle.maps.category);
  put_encoder(w, bundle.maps.subcategory);
  put_encoder(w, bundle.maps.concept_text);

  put_forest(w, bundle.model.base);
  w.f64(bundle.model.base_train_mse);
  w.u64(bundle.model.stages.size());
  for (const auto& stage : bundle.model.stages) {
    w.u8(stage.gate ? 1 : 0);
    if (stage.gate) put_boost(w, *stage.gate);
    w.u8(stage.compensator ? 1 : 0);
    if (stage.compensator) put_forest(w, *stage.compensator);
  }
  w.u64(bundle.model.training_trace.size());
  for (const auto& t : bundle.model.training_trace) {
    w.f64(t.train_mse);
    w.f64(t.tau);
    w.u64(t.extreme_count);
  }
  return w.take();
}

ModelBundle deserialize_bundle(const std::string& payload) {
  Reader r(payload);
  ModelBundle bundle;
  bundle.mode = r.u8() == 0 ? TextFeatureMode::WordCount : TextFeatureMode::TextLength;

  RefineConfig cfg;
  cfg.k = r.i32();
  cfg.t_y = r.f64();
  cfg.base = get_forest_config(r);
  cfg.compensator = get_forest_config(r);
  cfg.boost_rounds = r.i32();
  cfg.seed = r.u64();
  bundle.model.config = cfg;

  bundle.maps.category = get_encoder(r);
  bundle.maps.subcategory = get_encoder(r);
  bundle.maps.concept_text = get_encoder(r);

  bundle.model.base = get_forest(r);
  bundle.model.base_train_mse = r.f64();
  bundle.model.stages.resize(r.u64());
  for (auto& stage : bundle.model.stages) {
    if (r.u8()) stage.gate = get_boost(r);
    if (r.u8()) stage.compensator = get_forest(r);
  }
  bundle.model.training_trace.resize(r.u64());
  for (auto& t : bundle.model.training_trace) {
    t.train_mse = r.f64();
    t.tau = r.f64();
    t.extreme_count = r.u64();
  }
  if (!r.done()) throw IoError("model payload has trailing bytes");
  return bundle;
}

void save_model(const ModelBundle& bundle, const std::string& path) {
  std::string payload = serialize_bundle(bundle);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);

  out.write(kModelMagic, 4);
  Writer header;
  header.u32(kModelVersion);
  header.u64(payload.size());
  std::string h = header.take();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  Writer footer;
  footer.u32(crc32(payload.data(), payload.size()));
  std::string f = footer.take();
  out.write(f.data(), static_cast<std::streamsize>(f.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

ModelBundle load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  if (contents.size() < 16) throw IoError("model file truncated: " + path);
  if (std::memcmp(contents.data(), kModelMagic, 4) != 0)
    throw BadMagic("not a model file: " + path);

  std::uint32_t version = 0;
  std::uint64_t payload_size = 0;
  {
    // parse fixed header manually: magic(4) version(4) size(8)
    auto b = [&](std::size_t i) {
      return static_cast<std::uint64_t>(static_cast<std::uint8_t>(contents[i]));
    };
    for (int i = 0; i < 4; ++i) version |= static_cast<std::uint32_t>(b(4 + i)) << (8 * i);
    for (int i = 0; i < 8; ++i) payload_size |= b(8 + i) << (8 * i);
  }
  if (version != kModelVersion)
    throw VersionUnsupported("model version " + std::to_string(version) +
                             ", expected " + std::to_string(kModelVersion));
  if (contents.size() != 16 + payload_size + 4)
    throw IoError("model file size mismatch: " + path);
  std::string payload = contents.substr(16, payload_size);

  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(
                  static_cast<std::uint8_t>(contents[16 + payload_size + i]))
              << (8 * i);
  if (crc32(payload.data(), payload.size()) != stored)
    throw ChecksumMismatch("model payload corrupted: " + path);
  return deserialize_bundle(payload);
}

std::string model_summary_json(const ModelBundle& bundle) {
  nlohmann::json j;
  const RefineConfig& cfg = bundle.model.config;
  j["config"]["k"] = cfg.k;
  j["config"]["t_y"] = cfg.t_y;
  j["config"]["seed"] = cfg.seed;
  j["config"]["boost_rounds"] = cfg.boost_rounds;
  auto forest_json = [](const ForestConfig& f) {
    nlohmann::json o;
    o["tree_count"] = f.tree_count;
    o["max_depth"] = f.params.max_depth;
    o["min_samples_leaf"] = f.params.min_samples_leaf;
    o["features_per_split"] = f.params.features_per_split;
    o["bootstrap"] = f.bootstrap;
    return o;
  };
  j["config"]["base"] = forest_json(cfg.base);
  j["config"]["compensator"] = forest_json(cfg.compensator);
  j["text_mode"] =
      bundle.mode == TextFeatureMode::WordCount ? "wordcount" : "textlen";
  j["base_train_mse"] = bundle.model.base_train_mse;
  j["training_trace"] = nlohmann::json::array();
  for (const auto& t : bundle.model.training_trace) {
    nlohmann::json e;
    e["train_mse"] = t.train_mse;
    e["tau"] = t.tau;
    e["extreme_count"] = t.extreme_count;
    j["training_trace"].push_back(e);
  }
  j["encoders"]["category"] = bundle.maps.category.size();
  j["encoders"]["subcategory"] = bundle.maps.subcategory.size();
  j["encoders"]["concept"] = bundle.maps.concept_text.size();
  return j.dump(2);
}

}  // namespace popref

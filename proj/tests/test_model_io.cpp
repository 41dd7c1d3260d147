#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "popref/dataset.hpp"
#include "popref/errors.hpp"
#include "popref/model_io.hpp"
#include "support/oracles.hpp"

using namespace popref;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

ModelBundle make_bundle(double t_y, std::uint64_t seed) {
  SynthConfig data_cfg;
  data_cfg.n = 250;
  data_cfg.seed = seed;
  Dataset data = generate_synthetic(data_cfg);
  EncodingMaps maps = fit_encoding_maps(data.records);
  auto X = digitize_all(data.records, maps, TextFeatureMode::TextLength);
  auto y = data.labels();

  RefineConfig cfg;
  cfg.k = 2;
  cfg.t_y = t_y;
  cfg.seed = seed;
  cfg.base.tree_count = 8;
  cfg.base.params = {0, 2, 5};
  cfg.compensator.tree_count = 8;
  cfg.compensator.params = {0, 2, 5};
  cfg.boost_rounds = 10;
  RefinementModel model = train_refinement(X, y, cfg);
  return {std::move(model), std::move(maps), TextFeatureMode::TextLength};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

}  // namespace

TEST_CASE("save/load round trip preserves predictions bit-exactly") {
  for (double t_y : {0.0, 0.2}) {
    ModelBundle bundle = make_bundle(t_y, 11);
    std::string path = temp_path("popref_model.rfne");
    save_model(bundle, path);
    ModelBundle loaded = load_model(path);

    CHECK(loaded.mode == bundle.mode);
    CHECK(loaded.model.config == bundle.model.config);
    CHECK(loaded.maps.category.size() == bundle.maps.category.size());
    CHECK(loaded.model.training_trace.size() == bundle.model.training_trace.size());

    auto queries = testing::random_matrix(1000, 12, 0.0, 2000.0);
    for (const auto& q : queries)
      CHECK(refine_predict(loaded.model, q) == refine_predict(bundle.model, q));
    std::remove(path.c_str());
  }
}

TEST_CASE("serialization is deterministic") {
  ModelBundle a = make_bundle(0.1, 17);
  ModelBundle b = make_bundle(0.1, 17);
  CHECK(serialize_bundle(a) == serialize_bundle(b));
}

TEST_CASE("any flipped payload byte fails the checksum") {
  ModelBundle bundle = make_bundle(0.0, 13);
  std::string path = temp_path("popref_flip.rfne");
  save_model(bundle, path);
  std::string contents = read_file(path);
  REQUIRE(contents.size() > 100);

  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    std::string corrupted = contents;
    std::size_t payload_start = 16;
    std::size_t payload_size = corrupted.size() - payload_start - 4;
    std::size_t pos = payload_start + rng.next_below(payload_size);
    corrupted[pos] = static_cast<char>(corrupted[pos] ^ 0x40);
    std::string bad_path = temp_path("popref_flip_bad.rfne");
    write_file(bad_path, corrupted);
    CHECK_THROWS_AS(load_model(bad_path), ChecksumMismatch);
    std::remove(bad_path.c_str());
  }
  std::remove(path.c_str());
}

TEST_CASE("bad magic and bad version are rejected before the checksum") {
  ModelBundle bundle = make_bundle(0.0, 15);
  std::string path = temp_path("popref_magic.rfne");
  save_model(bundle, path);
  std::string contents = read_file(path);

  std::string wrong_magic = contents;
  wrong_magic[0] = 'X';
  wrong_magic[1] = 'X';
  wrong_magic[2] = 'X';
  wrong_magic[3] = 'X';
  std::string magic_path = temp_path("popref_magic_bad.rfne");
  write_file(magic_path, wrong_magic);
  CHECK_THROWS_AS(load_model(magic_path), BadMagic);

  std::string wrong_version = contents;
  wrong_version[4] = 9;
  std::string version_path = temp_path("popref_version_bad.rfne");
  write_file(version_path, wrong_version);
  CHECK_THROWS_AS(load_model(version_path), VersionUnsupported);

  std::string truncated = contents.substr(0, contents.size() / 2);
  std::string trunc_path = temp_path("popref_trunc.rfne");
  write_file(trunc_path, truncated);
  CHECK_THROWS_AS(load_model(trunc_path), IoError);

  CHECK_THROWS_AS(load_model(temp_path("popref_nope.rfne")), IoError);

  for (const auto& p : {path, magic_path, version_path, trunc_path})
    std::remove(p.c_str());
}

TEST_CASE("crc32 matches the reference vector") {
  // IEEE 802.3 check value for "123456789"
  const char* s = "123456789";
  CHECK(crc32(s, 9) == 0xCBF43926u);
  CHECK(crc32(s, 0) == 0x0u);
}

TEST_CASE("model summary JSON carries config and trace") {
  ModelBundle bundle = make_bundle(0.25, 19);
  std::string json = model_summary_json(bundle);
  CHECK(json.find("\"k\": 2") != std::string::npos);
  CHECK(json.find("\"t_y\": 0.25") != std::string::npos);
  CHECK(json.find("training_trace") != std::string::npos);
}

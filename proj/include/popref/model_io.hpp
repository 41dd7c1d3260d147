#pragma once

#include <cstdint>
#include <string>

#include "popref/refine.hpp"

namespace popref {

// "RFNE" container: magic, format version, payload length, payload,
// CRC-32 of the payload. Doubles are stored bit-exactly, so a load/save
// round trip reproduces predictions to the bit.
inline constexpr char kModelMagic[4] = {'R', 'F', 'N', 'E'};
inline constexpr std::uint32_t kModelVersion = 1;

struct ModelBundle {
  RefinementModel model;
  EncodingMaps maps;
  TextFeatureMode mode = TextFeatureMode::TextLength;
};

std::uint32_t crc32(const void* data, std::size_t size);

std::string serialize_bundle(const ModelBundle& bundle);
ModelBundle deserialize_bundle(const std::string& payload);

void save_model(const ModelBundle& bundle, const std::string& path);
ModelBundle load_model(const std::string& path);

// Human-readable config + training-trace summary written next to the model.
std::string model_summary_json(const ModelBundle& bundle);

}  // namespace popref

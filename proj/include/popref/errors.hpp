#pragma once

#include <stdexcept>
#include <string>

namespace popref {

// Base type for everything this library throws.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- argument / state errors -------------------------------------------
struct EmptyInput : Error {
  explicit EmptyInput(const std::string& msg = "empty input") : Error(msg) {}
};
struct EmptyCorpus : Error {
  explicit EmptyCorpus(const std::string& msg = "empty corpus") : Error(msg) {}
};
struct EmptyData : Error {
  explicit EmptyData(const std::string& msg = "empty data") : Error(msg) {}
};
struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& msg = "shape mismatch") : Error(msg) {}
};
struct InvalidWeights : Error {
  explicit InvalidWeights(const std::string& msg = "invalid sample weights") : Error(msg) {}
};
struct TooFewSamples : Error {
  explicit TooFewSamples(const std::string& msg = "too few samples") : Error(msg) {}
};
struct SingularSystem : Error {
  explicit SingularSystem(const std::string& msg = "singular system") : Error(msg) {}
};

// --- data-file errors (CLI exit code 3) --------------------------------
struct DataError : Error {
  explicit DataError(const std::string& msg) : Error(msg) {}
};
struct FileNotFound : DataError {
  explicit FileNotFound(const std::string& path) : DataError("file not found: " + path) {}
};
struct SchemaMismatch : DataError {
  explicit SchemaMismatch(const std::string& msg) : DataError(msg) {}
};
struct EmptyFile : DataError {
  explicit EmptyFile(const std::string& path) : DataError("empty file: " + path) {}
};
struct ParseError : DataError {
  explicit ParseError(const std::string& msg) : DataError(msg) {}
};
struct TestCountTooLarge : DataError {
  explicit TestCountTooLarge(const std::string& msg) : DataError(msg) {}
};
struct MissingLabels : DataError {
  explicit MissingLabels(const std::string& msg = "dataset has no labels") : DataError(msg) {}
};

// --- model-file errors (CLI exit code 4) --------------------------------
struct ModelFileError : Error {
  explicit ModelFileError(const std::string& msg) : Error(msg) {}
};
struct IoError : ModelFileError {
  explicit IoError(const std::string& msg) : ModelFileError(msg) {}
};
struct BadMagic : ModelFileError {
  explicit BadMagic(const std::string& msg = "bad magic") : ModelFileError(msg) {}
};
struct VersionUnsupported : ModelFileError {
  explicit VersionUnsupported(const std::string& msg = "unsupported model version") : ModelFileError(msg) {}
};
struct ChecksumMismatch : ModelFileError {
  explicit ChecksumMismatch(const std::string& msg = "payload checksum mismatch") : ModelFileError(msg) {}
};

}  // namespace popref

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "lineocr/codec.hpp"
#include "lineocr/network.hpp"
#include "lineocr/netspec.hpp"
#include "lineocr/preprocess.hpp"

namespace lineocr {

/// A trained (or freshly initialized) recognizer: architecture, alphabet, weights.
struct Model {
  NetworkSpec spec;
  Codec codec;
  Network<float> network;
  /// Free-form numeric hyperparameters recorded with the weights (dropout,
  /// learning_rate, ...). Persisted in the model header.
  std::map<std::string, double> hyper;

  static Model create(const NetworkSpec& spec, const Codec& codec, std::uint64_t seed) {
    return Model{spec, codec, Network<float>(spec, kLineHeight, codec.size(), seed), {}};
  }
};

// ---------------------------------------------------------------------------
// Model files
//
//   line 1   "LINEOCR-MODEL <version>\n"
//   line 2   "<header byte length>\n"
//   header   JSON: spec, codec (UTF-8 string), hyper, tensors [{name, dtype,
//            shape, offset, length}] in body order
//   "\n"
//   body     concatenated little-endian float32 blobs

inline constexpr int kModelFormatVersion = 1;

class ModelFormatError : public DataError {
 public:
  enum class Kind { NotAModel, VersionMismatch, Truncated, UnknownTensor, MissingTensor, BadHeader, Io };

  ModelFormatError(Kind kind, const std::string& message) : DataError(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Deterministic bytes for identical models.
std::string serialize_model(const Model& model);
Model deserialize_model(std::string_view bytes);

/// Writes to a temporary sibling and renames it into place.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace lineocr

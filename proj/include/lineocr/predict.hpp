// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lineocr/model.hpp"

namespace lineocr {

struct CharPrediction {
  std::string ch;
  double confidence = 0.0;
  std::size_t start_t = 0;  // half-open timestep range
  std::size_t end_t = 0;
  double start_px = 0.0;    // raw-image columns, padding removed
  double end_px = 0.0;
};

struct Prediction {
  std::string text;
  std::vector<CharPrediction> chars;         // filled when extended
  std::optional<ProbMatrix<float>> probs;    // filled when extended
};

/// Greedy-decodes a probability matrix and maps timesteps back to pixels.
Prediction decode_prediction(const ProbMatrix<float>& probs, const Codec& codec, const LineImage& line,
                             std::size_t downsampling, bool extended);

Prediction predict_line(const Model& model, const LineImage& line, bool extended = false);

/// Models voting through per-timestep probability averaging over the union codec.
class Ensemble {
 public:
  /// Models must outlive the ensemble and share line height and horizontal downsampling.
  explicit Ensemble(std::vector<const Model*> models);

  const Codec& codec() const noexcept { return codec_; }
  std::size_t size() const noexcept { return models_.size(); }
  const Model& model(std::size_t i) const { return *models_.at(i); }
  /// remap(i)[k] = union column of model i's column k.
  const std::vector<int>& remap(std::size_t i) const { return remap_.at(i); }
  std::size_t downsampling() const noexcept { return downsampling_; }

 private:
  std::vector<const Model*> models_;
  Codec codec_;
  std::vector<std::vector<int>> remap_;
  std::size_t downsampling_ = 1;
};

/// Averages voter matrices after moving each into union-codec columns (absent
/// characters get 0). Throws ShapeError when timestep counts differ.
ProbMatrix<float> vote_matrices(const std::vector<ProbMatrix<float>>& matrices,
                                const std::vector<std::vector<int>>& remaps, std::size_t union_size);

Prediction vote_confidence(const Ensemble& ensemble, const LineImage& line, bool extended = false);

/// Structured record: {"text", "chars": [{"char","confidence","start_px","end_px"}], "probabilities"?}.
std::string prediction_json(const Prediction& prediction);

}  // namespace lineocr

// SPDX-License-Identifier: Apache-2.0
#include "lineocr/predict.hpp"

#include <algorithm>
#include <json.hpp>

#include "lineocr/utf8.hpp"

namespace lineocr {

Prediction decode_prediction(const ProbMatrix<float>& probs, const Codec& codec, const LineImage& line,
                             std::size_t downsampling, bool extended) {
  const GreedyResult greedy = greedy_decode(probs);
  Prediction out;
  out.text = decode(greedy.labels, codec);
  if (!extended) return out;

  const double pad = static_cast<double>(kLinePadding);
  const double limit = static_cast<double>(line.source_width);
  auto to_px = [&](std::size_t t) {
    const double px = (static_cast<double>(t * downsampling) - pad) / line.scale;
    return std::clamp(px, 0.0, limit);
  };
  for (std::size_t k = 0; k < greedy.labels.size(); ++k) {
    const auto [start, end] = greedy.positions[k];
    out.chars.push_back({utf8::encode(codec.char_at(greedy.labels[k])), greedy.confidences[k], start, end,
                         to_px(start), to_px(end)});
  }
  out.probs = probs;
  return out;
}

Prediction predict_line(const Model& model, const LineImage& line, bool extended) {
  const auto output = model.network.forward(line.as_tensor());
  return decode_prediction(output.probs, model.codec, line, model.spec.horizontal_downsampling(), extended);
}

Ensemble::Ensemble(std::vector<const Model*> models) : models_(std::move(models)) {
  if (models_.empty()) throw ParamError("an ensemble needs at least one model");
  downsampling_ = models_.front()->spec.horizontal_downsampling();
  std::u32string all;
  for (const Model* m : models_) {
    if (m->spec.horizontal_downsampling() != downsampling_ ||
        m->network.input_height() != models_.front()->network.input_height()) {
      throw ShapeError("ensemble models must share line height and horizontal downsampling");
    }
    all += m->codec.chars();
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  codec_ = Codec(all);
  for (const Model* m : models_) {
    std::vector<int> map(m->codec.size());
    map[kBlank] = kBlank;
    for (std::size_t k = 1; k < map.size(); ++k) map[k] = codec_.index_of(m->codec.char_at(static_cast<int>(k)));
    remap_.push_back(std::move(map));
  }
}

ProbMatrix<float> vote_matrices(const std::vector<ProbMatrix<float>>& matrices,
                                const std::vector<std::vector<int>>& remaps, std::size_t union_size) {
  if (matrices.empty() || matrices.size() != remaps.size()) throw ParamError("one remap per voter matrix required");
  const std::size_t steps = matrices.front().dim(0);
  std::vector<double> sum(steps * union_size, 0.0);
  for (std::size_t v = 0; v < matrices.size(); ++v) {
    const auto& m = matrices[v];
    if (m.dim(0) != steps) {
      throw ShapeError("ensemble incompatible: voter " + std::to_string(v) + " yields " + std::to_string(m.dim(0)) +
                       " timesteps, voter 0 yields " + std::to_string(steps));
    }
    if (m.dim(1) != remaps[v].size()) throw ShapeError("voter matrix width does not match its codec remap");
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t k = 0; k < m.dim(1); ++k) {
        sum[t * union_size + static_cast<std::size_t>(remaps[v][k])] += static_cast<double>(m.at(t, k));
      }
    }
  }
  ProbMatrix<float> out({steps, union_size});
  const double voters = static_cast<double>(matrices.size());
  for (std::size_t i = 0; i < sum.size(); ++i) out[i] = static_cast<float>(sum[i] / voters);
  return out;
}

Prediction vote_confidence(const Ensemble& ensemble, const LineImage& line, bool extended) {
  std::vector<ProbMatrix<float>> matrices;
  std::vector<std::vector<int>> remaps;
  const auto input = line.as_tensor();
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    matrices.push_back(ensemble.model(i).network.forward(input).probs);
    remaps.push_back(ensemble.remap(i));
  }
  const auto voted = vote_matrices(matrices, remaps, ensemble.codec().size());
  return decode_prediction(voted, ensemble.codec(), line, ensemble.downsampling(), extended);
}

std::string prediction_json(const Prediction& prediction) {
  nlohmann::json j;
  j["text"] = prediction.text;
  j["chars"] = nlohmann::json::array();
  for (const auto& c : prediction.chars) {
    j["chars"].push_back({{"char", c.ch},
                          {"confidence", c.confidence},
                          {"start_px", c.start_px},
                          {"end_px", c.end_px},
                          {"start_t", c.start_t},
                          {"end_t", c.end_t}});
  }
  if (prediction.probs) {
    const auto& p = *prediction.probs;
    auto rows = nlohmann::json::array();
    for (std::size_t t = 0; t < p.dim(0); ++t) {
      const auto r = p.row(t);
      rows.push_back(std::vector<float>(r.begin(), r.end()));
    }
    j["probabilities"] = std::move(rows);
  }
  return j.dump();
}

}  // namespace lineocr

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "lineocr/layers.hpp"
#include "lineocr/netspec.hpp"

namespace lineocr {

struct ForwardOptions {
  bool training = false;
  double dropout = 0.0;  // applied to the last LSTM output, training only
  Rng* rng = nullptr;    // required when training with dropout > 0
};

/// Caches recorded by one forward pass; consumed by backward.
template <typename T>
struct Tape {
  std::vector<ConvCache<T>> convs;
  std::vector<PoolCache> pools;
  std::vector<LstmCache<T>> lstms;
  Shape feature_shape;  // [h', w', c] before the image-to-sequence bridge
  Tensor<T> dropout_mask;
  Tensor<T> dense_input;
  bool valid = false;
};

template <typename T>
struct NetworkOutput {
  Tensor<T> logits;     // [T', L]
  ProbMatrix<T> probs;  // [T', L]
};

/// CNN stack on an [h, w, 1] line image, then the feature map [h', w', c] is read
/// column by column as a sequence of w' vectors of size h'*c, then the LSTM
/// stack and a softmax output layer over the codec.
template <typename T>
class Network {
 public:
  Network() = default;
  Network(const NetworkSpec& spec, std::size_t input_height, std::size_t classes, std::uint64_t seed);

  /// Assembles a network from existing weights (model loading, precision casts).
  static Network from_params(const NetworkSpec& spec, std::size_t input_height, std::size_t classes,
                             std::vector<LayerParams<T>> params);

  NetworkOutput<T> forward(const Tensor<T>& image, const ForwardOptions& options = {}, Tape<T>* tape = nullptr) const;

  /// Accumulates weight gradients into `grads` (one map per params() entry).
  void backward(const Tensor<T>& grad_logits, const Tape<T>& tape, std::vector<GradMap<T>>& grads) const;

  /// Accumulates weight gradients into params()[i].grads.
  void backward(const Tensor<T>& grad_logits, const Tape<T>& tape);

  std::vector<GradMap<T>> make_grad_maps() const;
  void zero_grad();

  std::vector<LayerParams<T>>& params() noexcept { return params_; }
  const std::vector<LayerParams<T>>& params() const noexcept { return params_; }
  LayerParams<T>& output_layer() { return params_.back(); }
  const LayerParams<T>& output_layer() const { return params_.back(); }

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::size_t input_height() const noexcept { return input_height_; }
  std::size_t classes() const noexcept { return classes_; }
  std::size_t output_length(std::size_t image_width) const { return image_width / spec_.horizontal_downsampling(); }

  template <typename U>
  Network<U> cast() const {
    std::vector<LayerParams<U>> out;
    for (const auto& p : params_) {
      LayerParams<U> q;
      q.name = p.name;
      for (const auto& [role, w] : p.weights) q.weights.emplace(role, w.template cast<U>());
      q.zero_grad();
      out.push_back(std::move(q));
    }
    return Network<U>::from_params(spec_, input_height_, classes_, std::move(out));
  }

 private:
  void validate() const;

  NetworkSpec spec_;
  std::size_t input_height_ = 0;
  std::size_t classes_ = 0;
  std::vector<LayerParams<T>> params_;  // conv*, lstm* in spec order, then "output"
};

}  // namespace lineocr

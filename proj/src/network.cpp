// SPDX-License-Identifier: Apache-2.0
#include "lineocr/network.hpp"

namespace lineocr {

namespace {

template <typename T>
Tensor<T> image_to_sequence(const Tensor<T>& features) {
  const std::size_t h = features.dim(0), w = features.dim(1), c = features.dim(2);
  Tensor<T> seq({w, h * c});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const T* src = features.raw() + (y * w + x) * c;
      std::copy(src, src + c, seq.raw() + x * h * c + y * c);
    }
  }
  return seq;
}

template <typename T>
Tensor<T> sequence_to_image(const Tensor<T>& seq, const Shape& feature_shape) {
  const std::size_t h = feature_shape[0], w = feature_shape[1], c = feature_shape[2];
  Tensor<T> features(feature_shape);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const T* src = seq.raw() + x * h * c + y * c;
      std::copy(src, src + c, features.raw() + (y * w + x) * c);
    }
  }
  return features;
}

}  // namespace

template <typename T>
Network<T>::Network(const NetworkSpec& spec, std::size_t input_height, std::size_t classes, std::uint64_t seed)
    : spec_(spec), input_height_(input_height), classes_(classes) {
  if (spec.layers.empty()) throw ShapeError("network spec has no layers");
  if (classes < 2) throw ShapeError("a codec needs at least one character besides the blank");
  Rng rng(seed);
  std::size_t height = input_height, channels = 1, conv_i = 0, lstm_i = 0;
  std::size_t seq_features = 0;
  bool sequence = false;
  for (const auto& layer : spec.layers) {
    switch (layer.kind) {
      case LayerKind::Conv:
        params_.push_back(make_conv_params<T>("conv" + std::to_string(conv_i++), channels,
                                              static_cast<std::size_t>(layer.filters), rng));
        channels = static_cast<std::size_t>(layer.filters);
        break;
      case LayerKind::MaxPool:
        if (height < static_cast<std::size_t>(layer.kh)) {
          throw ShapeError("spec '" + render_spec(spec) + "' pools below height 1 for input height " +
                           std::to_string(input_height));
        }
        height /= static_cast<std::size_t>(layer.kh);
        break;
      case LayerKind::Lstm: {
        const std::size_t in = sequence ? seq_features : height * channels;
        params_.push_back(make_lstm_params<T>("lstm" + std::to_string(lstm_i++), in,
                                              static_cast<std::size_t>(layer.hidden), rng));
        seq_features = 2 * static_cast<std::size_t>(layer.hidden);
        sequence = true;
        break;
      }
    }
  }
  const std::size_t dense_in = sequence ? seq_features : height * channels;
  params_.push_back(make_dense_params<T>("output", dense_in, classes, rng));
  validate();
}

template <typename T>
Network<T> Network<T>::from_params(const NetworkSpec& spec, std::size_t input_height, std::size_t classes,
                                   std::vector<LayerParams<T>> params) {
  Network<T> net;
  net.spec_ = spec;
  net.input_height_ = input_height;
  net.classes_ = classes;
  net.params_ = std::move(params);
  net.validate();
  return net;
}

template <typename T>
void Network<T>::validate() const {
  std::size_t expected = 1;
  for (const auto& l : spec_.layers) {
    if (l.kind != LayerKind::MaxPool) ++expected;
  }
  if (params_.size() != expected) {
    throw ShapeError("network has " + std::to_string(params_.size()) + " parameter sets, spec implies " +
                     std::to_string(expected));
  }
  if (params_.back().weight("W").dim(1) != classes_) throw ShapeError("output layer does not match codec size");
}

template <typename T>
NetworkOutput<T> Network<T>::forward(const Tensor<T>& image, const ForwardOptions& options, Tape<T>* tape) const {
  if (image.rank() != 3 || image.dim(2) != 1) {
    throw ShapeError("network input must be [h,w,1], got " + shape_string(image.shape()));
  }
  if (image.dim(0) != input_height_) {
    throw ShapeError("network expects line height " + std::to_string(input_height_) + ", got " +
                     std::to_string(image.dim(0)));
  }
  if (tape) *tape = Tape<T>{};

  Tensor<T> x = image;
  std::size_t p = 0;
  bool sequence = false;
  bool any_lstm = false;
  for (const auto& layer : spec_.layers) {
    switch (layer.kind) {
      case LayerKind::Conv: {
        ConvCache<T>* cache = tape ? &tape->convs.emplace_back() : nullptr;
        x = conv2d_forward(x, params_[p++], cache);
        break;
      }
      case LayerKind::MaxPool: {
        PoolCache* cache = tape ? &tape->pools.emplace_back() : nullptr;
        x = max_pool_forward(x, static_cast<std::size_t>(layer.kh), static_cast<std::size_t>(layer.kw), cache);
        break;
      }
      case LayerKind::Lstm: {
        if (!sequence) {
          if (tape) tape->feature_shape = x.shape();
          x = image_to_sequence(x);
          sequence = true;
        }
        LstmCache<T>* cache = tape ? &tape->lstms.emplace_back() : nullptr;
        x = bilstm_forward(x, params_[p++], cache);
        any_lstm = true;
        break;
      }
    }
  }
  if (!sequence) {
    if (tape) tape->feature_shape = x.shape();
    x = image_to_sequence(x);
  }
  if (options.training && options.dropout > 0.0 && any_lstm) {
    if (!options.rng) throw ParamError("training with dropout requires an rng");
    x = dropout_apply(x, options.dropout, *options.rng, tape ? &tape->dropout_mask : nullptr);
  }
  DenseOutput<T> dense = dense_softmax_forward(x, params_.back());
  if (tape) {
    tape->dense_input = std::move(x);
    tape->valid = true;
  }
  return {std::move(dense.logits), std::move(dense.probs)};
}

template <typename T>
void Network<T>::backward(const Tensor<T>& grad_logits, const Tape<T>& tape, std::vector<GradMap<T>>& grads) const {
  if (!tape.valid) throw StateError("network backward called without forward caches");
  if (grads.size() != params_.size()) throw ShapeError("gradient set does not match network parameters");

  Tensor<T> g = dense_softmax_backward(grad_logits, tape.dense_input, params_.back(), grads.back());
  if (!tape.dropout_mask.empty()) g = dropout_backward(g, tape.dropout_mask);

  std::size_t p = params_.size() - 1;
  std::size_t conv_i = tape.convs.size(), pool_i = tape.pools.size(), lstm_i = tape.lstms.size();
  bool sequence = true;
  for (auto it = spec_.layers.rbegin(); it != spec_.layers.rend(); ++it) {
    if (it->kind != LayerKind::Lstm && sequence) {
      g = sequence_to_image(g, tape.feature_shape);
      sequence = false;
    }
    switch (it->kind) {
      case LayerKind::Lstm:
        --p;
        g = bilstm_backward(g, tape.lstms[--lstm_i], params_[p], grads[p]);
        break;
      case LayerKind::MaxPool:
        g = max_pool_backward(g, tape.pools[--pool_i]);
        break;
      case LayerKind::Conv:
        --p;
        g = conv2d_backward(g, tape.convs[--conv_i], params_[p], grads[p]);
        break;
    }
  }
}

template <typename T>
void Network<T>::backward(const Tensor<T>& grad_logits, const Tape<T>& tape) {
  std::vector<GradMap<T>> grads;
  grads.reserve(params_.size());
  for (auto& p : params_) {
    if (p.grads.size() != p.weights.size()) p.zero_grad();
    grads.push_back(std::move(p.grads));
  }
  try {
    static_cast<const Network&>(*this).backward(grad_logits, tape, grads);
  } catch (...) {
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i].grads = std::move(grads[i]);
    throw;
  }
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i].grads = std::move(grads[i]);
}

template <typename T>
std::vector<GradMap<T>> Network<T>::make_grad_maps() const {
  std::vector<GradMap<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.make_grad_map());
  return out;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template class Network<float>;
template class Network<double>;

}  // namespace lineocr

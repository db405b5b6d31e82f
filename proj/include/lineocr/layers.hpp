// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "lineocr/rng.hpp"
#include "lineocr/tensor.hpp"

namespace lineocr {

template <typename T>
using GradMap = std::map<std::string, Tensor<T>>;

/// Named weights of one layer plus same-shaped gradient accumulators.
template <typename T>
struct LayerParams {
  std::string name;
  std::map<std::string, Tensor<T>> weights;
  GradMap<T> grads;

  /// Allocates (or clears) a zero gradient for every weight.
  void zero_grad() {
    for (const auto& [role, w] : weights) grads[role] = Tensor<T>(w.shape());
  }

  const Tensor<T>& weight(const std::string& role) const;
  Tensor<T>& weight(const std::string& role);

  /// Zero-filled gradient map shaped like `weights`.
  GradMap<T> make_grad_map() const {
    GradMap<T> out;
    for (const auto& [role, w] : weights) out.emplace(role, Tensor<T>(w.shape()));
    return out;
  }
};

// ---------------------------------------------------------------------------
// 3x3 convolution, stride 1, zero padding 1, fused ReLU.
// input [h,w,c_in]; weights "kernel" [3,3,c_in,c_out], "bias" [c_out].

template <typename T>
struct ConvCache {
  Tensor<T> input;
  Tensor<T> output;  // post-ReLU
};

template <typename T>
LayerParams<T> make_conv_params(std::string name, std::size_t in_channels, std::size_t filters, Rng& rng);

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const LayerParams<T>& params, ConvCache<T>* cache = nullptr);

/// Accumulates into `grads` and returns the gradient w.r.t. the input.
template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& grad_out, const ConvCache<T>& cache, const LayerParams<T>& params,
                          GradMap<T>& grads);

// ---------------------------------------------------------------------------
// Non-overlapping max pooling with kernel == stride, kh,kw in {1,2}.

struct PoolCache {
  Shape input_shape;
  std::vector<std::size_t> argmax;  // flat input index per output cell
};

template <typename T>
Tensor<T> max_pool_forward(const Tensor<T>& input, std::size_t kh, std::size_t kw, PoolCache* cache = nullptr);

template <typename T>
Tensor<T> max_pool_backward(const Tensor<T>& grad_out, const PoolCache& cache);

// ---------------------------------------------------------------------------
// Bidirectional LSTM without peepholes. Gate column order is [i | f | g | o].
// Per direction ("fw_", "bw_"): "W" [d,4H], "U" [H,4H], "b" [4H].
// Output [T, 2H]: forward states in columns [0,H), backward states in [H,2H).

template <typename T>
struct LstmDirectionCache {
  Tensor<T> gates;  // [T,4H] post-activation
  Tensor<T> cells;  // [T,H]
  Tensor<T> hidden; // [T,H]
};

template <typename T>
struct LstmCache {
  Tensor<T> input;
  LstmDirectionCache<T> forward;
  LstmDirectionCache<T> backward;
};

template <typename T>
LayerParams<T> make_lstm_params(std::string name, std::size_t input_size, std::size_t hidden, Rng& rng);

template <typename T>
Tensor<T> bilstm_forward(const Tensor<T>& input, const LayerParams<T>& params, LstmCache<T>* cache = nullptr);

template <typename T>
Tensor<T> bilstm_backward(const Tensor<T>& grad_out, const LstmCache<T>& cache, const LayerParams<T>& params,
                          GradMap<T>& grads);

// ---------------------------------------------------------------------------
// Affine output layer followed by a row-wise softmax.
// weights "W" [d,L], "bias" [L].

template <typename T>
struct DenseOutput {
  Tensor<T> logits;
  ProbMatrix<T> probs;
};

template <typename T>
LayerParams<T> make_dense_params(std::string name, std::size_t input_size, std::size_t classes, Rng& rng);

template <typename T>
DenseOutput<T> dense_softmax_forward(const Tensor<T>& input, const LayerParams<T>& params);

/// `grad_logits` is the gradient w.r.t. the pre-softmax logits (what ctc_loss returns).
template <typename T>
Tensor<T> dense_softmax_backward(const Tensor<T>& grad_logits, const Tensor<T>& input, const LayerParams<T>& params,
                                 GradMap<T>& grads);

/// Chains a gradient w.r.t. softmax probabilities back to the logits.
template <typename T>
Tensor<T> softmax_backward(const ProbMatrix<T>& probs, const Tensor<T>& grad_probs);

template <typename T>
ProbMatrix<T> softmax_rows(const Tensor<T>& logits);

// ---------------------------------------------------------------------------
// Inverted dropout. The mask holds 0 or 1/(1-rate) per element.

template <typename T>
Tensor<T> dropout_apply(const Tensor<T>& input, double rate, Rng& rng, Tensor<T>* mask = nullptr);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const Tensor<T>& mask);

}  // namespace lineocr

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lineocr/layers.hpp"

namespace lineocr {

/// Scales every gradient by max_norm/g when the global L2 norm g exceeds
/// max_norm. Returns the applied scale (1 when untouched).
template <typename T>
double clip_global_norm(const std::vector<Tensor<T>*>& grads, double max_norm);

template <typename T>
double clip_global_norm(std::vector<LayerParams<T>>& params, double max_norm);

template <typename T>
double global_norm(const std::vector<LayerParams<T>>& params);

template <typename T>
struct AdamState {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  std::uint64_t step = 0;
  // keyed by "<layer>/<role>"
  std::map<std::string, Tensor<T>> first_moment;
  std::map<std::string, Tensor<T>> second_moment;
};

/// One bias-corrected Adam update of every weight; zeroes the gradients afterwards.
template <typename T>
void adam_step(std::vector<LayerParams<T>>& params, AdamState<T>& state);

}  // namespace lineocr

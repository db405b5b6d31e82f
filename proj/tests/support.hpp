// SPDX-License-Identifier: Apache-2.0
// Independent oracles and generators shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lineocr/rng.hpp"
#include "lineocr/tensor.hpp"

namespace testsupport {

using lineocr::Rng;
using lineocr::Tensor;

inline constexpr double kFdStep = 1e-6;
inline constexpr double kGradTolerance = 1e-4;

/// Relative error with an absolute floor so that gradients which are
/// numerically zero compare by absolute difference instead.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central difference of `loss` w.r.t. element `index` of `x`, restoring x.
inline double central_difference(Tensor<double>& x, std::size_t index, const std::function<double()>& loss,
                                 double h = kFdStep) {
  const double saved = x[index];
  x[index] = saved + h;
  const double up = loss();
  x[index] = saved - h;
  const double down = loss();
  x[index] = saved;
  return (up - down) / (2.0 * h);
}

inline Tensor<double> random_tensor(const lineocr::Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(shape);
  for (auto& v : t.data()) v = lineocr::uniform(rng, lo, hi);
  return t;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Row-stochastic matrix drawn from a softmax of uniform logits.
inline Tensor<double> random_probs(std::size_t t, std::size_t l, Rng& rng) {
  Tensor<double> p({t, l});
  for (std::size_t i = 0; i < t; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < l; ++j) z += (p.at(i, j) = std::exp(lineocr::uniform(rng, -2.0, 2.0)));
    for (std::size_t j = 0; j < l; ++j) p.at(i, j) /= z;
  }
  return p;
}

/// Textbook exponential recursion; no memoization, no shared code with the DP.
template <typename S>
std::size_t naive_edit_distance(const S& a, const S& b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const S a1 = a.substr(1), b1 = b.substr(1);
  const std::size_t sub = naive_edit_distance(a1, b1) + (a[0] == b[0] ? 0 : 1);
  const std::size_t del = naive_edit_distance(a1, b) + 1;
  const std::size_t ins = naive_edit_distance(a, b1) + 1;
  return std::min({sub, del, ins});
}

/// Random string of length in [lo, hi] over `alphabet`.
inline std::string random_string(Rng& rng, const std::string& alphabet, std::size_t lo, std::size_t hi) {
  const std::size_t n = lo + lineocr::uniform_index(rng, hi - lo + 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[lineocr::uniform_index(rng, alphabet.size())]);
  return s;
}

}  // namespace testsupport

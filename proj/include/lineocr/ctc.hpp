// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <utility>
#include <vector>

#include "lineocr/tensor.hpp"

namespace lineocr {

/// Codec indices; 0 is the blank and never appears in a label sequence.
using LabelSeq = std::vector<int>;

inline constexpr int kBlank = 0;

/// |target| plus one separating blank per adjacent duplicate pair: the fewest
/// timesteps any CTC path collapsing to `target` can have.
std::size_t ctc_required_length(std::span<const int> target);

template <typename T>
struct CtcResult {
  double loss = 0.0;   // -ln p(target | P)
  Tensor<T> grad;      // d loss / d logits, shape [T, L]
};

/// Forward-backward over the blank-interleaved target, entirely in log space.
/// Throws InfeasibleError when T < ctc_required_length(target).
template <typename T>
CtcResult<T> ctc_loss(const ProbMatrix<T>& probs, std::span<const int> target);

/// Same, from log-probabilities (log-softmax of the logits).
template <typename T>
CtcResult<T> ctc_loss_from_log_probs(const Tensor<T>& log_probs, std::span<const int> target);

/// Exhaustive oracle: sums the probability of every one of the L^T paths that
/// collapses to `target`. Returns -ln of the sum (+inf when no path does).
/// Refuses (ParamError) instances with more than 1e7 paths.
double ctc_brute_force(const ProbMatrix<double>& probs, std::span<const int> target);

/// Merges adjacent duplicates, then drops blanks.
LabelSeq collapse(std::span<const int> path);

struct GreedyResult {
  LabelSeq labels;
  std::vector<std::pair<std::size_t, std::size_t>> positions;  // half-open timestep range per label
  std::vector<double> confidences;                             // mean argmax probability over the range
};

/// Per-row argmax (lowest index wins ties) followed by collapse.
template <typename T>
GreedyResult greedy_decode(const ProbMatrix<T>& probs);

}  // namespace lineocr

// SPDX-License-Identifier: Apache-2.0
#include "lineocr/ctc.hpp"

#include <cmath>
#include <limits>

#include "lineocr/error.hpp"

namespace lineocr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double mx = a > b ? a : b;
  return mx + std::log1p(std::exp(-std::abs(a - b)));
}

void check_labels(std::span<const int> target, std::size_t classes) {
  for (int l : target) {
    if (l <= kBlank || static_cast<std::size_t>(l) >= classes) {
      throw ParamError("CTC target label " + std::to_string(l) + " outside [1," + std::to_string(classes - 1) + "]");
    }
  }
}

}  // namespace

std::size_t ctc_required_length(std::span<const int> target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

template <typename T>
CtcResult<T> ctc_loss_from_log_probs(const Tensor<T>& log_probs, std::span<const int> target) {
  if (log_probs.rank() != 2) throw ShapeError("ctc_loss expects a [T,L] matrix");
  const std::size_t steps = log_probs.dim(0), classes = log_probs.dim(1);
  check_labels(target, classes);
  const std::size_t required = ctc_required_length(target);
  if (steps < required) {
    throw InfeasibleError("CTC target needs " + std::to_string(required) + " timesteps but only " +
                          std::to_string(steps) + " are available");
  }

  // Extended target: blank, l1, blank, l2, ..., blank.
  const std::size_t S = 2 * target.size() + 1;
  std::vector<int> ext(S, kBlank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];

  auto lp = [&](std::size_t t, std::size_t s) { return static_cast<double>(log_probs.at(t, ext[s])); };
  auto can_skip = [&](std::size_t s) { return s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2]; };

  // alpha includes the emission at t, beta excludes it.
  std::vector<double> alpha(steps * S, kNegInf), beta(steps * S, kNegInf);
  alpha[0] = lp(0, 0);
  if (S > 1) alpha[1] = lp(0, 1);
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = alpha[(t - 1) * S + s];
      if (s >= 1) a = log_add(a, alpha[(t - 1) * S + s - 1]);
      if (can_skip(s)) a = log_add(a, alpha[(t - 1) * S + s - 2]);
      alpha[t * S + s] = a == kNegInf ? kNegInf : a + lp(t, s);
    }
  }

  const std::size_t last = steps - 1;
  beta[last * S + S - 1] = 0.0;
  if (S > 1) beta[last * S + S - 2] = 0.0;
  for (std::size_t t = last; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double b = beta[(t + 1) * S + s] + lp(t + 1, s);
      if (s + 1 < S) b = log_add(b, beta[(t + 1) * S + s + 1] + lp(t + 1, s + 1));
      if (s + 2 < S && can_skip(s + 2)) b = log_add(b, beta[(t + 1) * S + s + 2] + lp(t + 1, s + 2));
      beta[t * S + s] = b;
    }
  }

  double log_p = alpha[last * S + S - 1];
  if (S > 1) log_p = log_add(log_p, alpha[last * S + S - 2]);
  if (log_p == kNegInf) throw InfeasibleError("CTC target has zero probability under the given distribution");

  CtcResult<T> result;
  result.loss = -log_p;
  result.grad = Tensor<T>(log_probs.shape());
  std::vector<double> occupancy(classes);
  for (std::size_t t = 0; t < steps; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kNegInf);
    for (std::size_t s = 0; s < S; ++s) {
      occupancy[ext[s]] = log_add(occupancy[ext[s]], alpha[t * S + s] + beta[t * S + s]);
    }
    for (std::size_t k = 0; k < classes; ++k) {
      const double y = std::exp(static_cast<double>(log_probs.at(t, k)));
      result.grad.at(t, k) = static_cast<T>(y - std::exp(occupancy[k] - log_p));
    }
  }
  return result;
}

template <typename T>
CtcResult<T> ctc_loss(const ProbMatrix<T>& probs, std::span<const int> target) {
  Tensor<T> log_probs(probs.shape());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    log_probs[i] = probs[i] > T(0) ? std::log(probs[i]) : -std::numeric_limits<T>::infinity();
  }
  return ctc_loss_from_log_probs(log_probs, target);
}

double ctc_brute_force(const ProbMatrix<double>& probs, std::span<const int> target) {
  if (probs.rank() != 2) throw ShapeError("ctc_brute_force expects a [T,L] matrix");
  const std::size_t steps = probs.dim(0), classes = probs.dim(1);
  check_labels(target, classes);
  double paths = 1.0;
  for (std::size_t t = 0; t < steps; ++t) {
    paths *= static_cast<double>(classes);
    if (paths > 1e7) throw ParamError("ctc_brute_force refuses instances with more than 1e7 paths");
  }
  std::vector<int> path(steps, 0);
  const LabelSeq wanted(target.begin(), target.end());
  double total = 0.0;
  while (true) {
    if (collapse(path) == wanted) {
      double p = 1.0;
      for (std::size_t t = 0; t < steps; ++t) p *= probs.at(t, path[t]);
      total += p;
    }
    std::size_t t = 0;
    while (t < steps && ++path[t] == static_cast<int>(classes)) path[t++] = 0;
    if (t == steps) break;
  }
  return total > 0.0 ? -std::log(total) : std::numeric_limits<double>::infinity();
}

LabelSeq collapse(std::span<const int> path) {
  LabelSeq out;
  int previous = -1;
  for (int label : path) {
    if (label != previous && label != kBlank) out.push_back(label);
    previous = label;
  }
  return out;
}

template <typename T>
GreedyResult greedy_decode(const ProbMatrix<T>& probs) {
  if (probs.rank() != 2) throw ShapeError("greedy_decode expects a [T,L] matrix");
  const std::size_t steps = probs.dim(0);
  GreedyResult result;
  int run_label = -1;
  std::size_t run_start = 0;
  double run_sum = 0.0;
  auto close_run = [&](std::size_t end) {
    if (run_label > kBlank) {
      result.labels.push_back(run_label);
      result.positions.emplace_back(run_start, end);
      result.confidences.push_back(run_sum / static_cast<double>(end - run_start));
    }
  };
  for (std::size_t t = 0; t < steps; ++t) {
    const auto row = probs.row(t);
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k) {
      if (row[k] > row[best]) best = k;
    }
    const int label = static_cast<int>(best);
    if (label != run_label) {
      close_run(t);
      run_label = label;
      run_start = t;
      run_sum = 0.0;
    }
    run_sum += static_cast<double>(row[best]);
  }
  close_run(steps);
  return result;
}

template CtcResult<float> ctc_loss<float>(const ProbMatrix<float>&, std::span<const int>);
template CtcResult<double> ctc_loss<double>(const ProbMatrix<double>&, std::span<const int>);
template CtcResult<float> ctc_loss_from_log_probs<float>(const Tensor<float>&, std::span<const int>);
template CtcResult<double> ctc_loss_from_log_probs<double>(const Tensor<double>&, std::span<const int>);
template GreedyResult greedy_decode<float>(const ProbMatrix<float>&);
template GreedyResult greedy_decode<double>(const ProbMatrix<double>&);

}  // namespace lineocr

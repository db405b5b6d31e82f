// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "lineocr/ctc.hpp"
#include "lineocr/layers.hpp"
#include "support.hpp"

using namespace lineocr;
using namespace testsupport;

namespace {

LabelSeq random_target(Rng& rng, std::size_t classes, std::size_t max_len) {
  LabelSeq t(uniform_index(rng, max_len + 1));
  for (auto& v : t) v = 1 + static_cast<int>(uniform_index(rng, classes - 1));
  return t;
}

Tensor<double> log_softmax(const Tensor<double>& logits) {
  Tensor<double> out = logits;
  for (std::size_t t = 0; t < logits.dim(0); ++t) {
    double m = -1e300;
    for (double v : logits.row(t)) m = std::max(m, v);
    double z = 0.0;
    for (double v : logits.row(t)) z += std::exp(v - m);
    for (auto& v : out.row(t)) v = v - m - std::log(z);
  }
  return out;
}

}  // namespace

TEST(CtcLoss, MatchesBruteForceOnRandomSmallInstances) {
  Rng rng(100);
  std::size_t checked = 0;
  for (int n = 0; n < 300; ++n) {
    const std::size_t classes = 2 + uniform_index(rng, 3);
    const std::size_t steps = 1 + uniform_index(rng, 6);
    const auto probs = random_probs(steps, classes, rng);
    const auto target = random_target(rng, classes, 3);
    if (ctc_required_length(target) > steps) {
      EXPECT_THROW(ctc_loss(probs, target), InfeasibleError);
      EXPECT_TRUE(std::isinf(ctc_brute_force(probs, target)));
      continue;
    }
    EXPECT_NEAR(ctc_loss(probs, target).loss, ctc_brute_force(probs, target), 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 200u);
}

TEST(CtcLoss, SingleStepSingleLabel) {
  Tensor<double> p({1, 2}, std::vector<double>{0.25, 0.75});
  const LabelSeq t{1};
  EXPECT_NEAR(ctc_loss(p, t).loss, -std::log(0.75), 1e-15);
}

TEST(CtcLoss, EmptyTargetIsAllBlankPath) {
  Tensor<double> p({3, 2}, std::vector<double>{0.5, 0.5, 0.9, 0.1, 0.2, 0.8});
  EXPECT_NEAR(ctc_loss(p, LabelSeq{}).loss, -std::log(0.5 * 0.9 * 0.2), 1e-12);
}

TEST(CtcLoss, RepeatedLabelsNeedSeparatingBlank) {
  const LabelSeq t{1, 1};
  EXPECT_EQ(ctc_required_length(t), 3u);
  Rng rng(1);
  EXPECT_THROW(ctc_loss(random_probs(2, 2, rng), t), InfeasibleError);
  const LabelSeq u{1, 2, 2, 1, 1};
  EXPECT_EQ(ctc_required_length(u), 7u);
}

TEST(CtcLoss, RejectsBlankOrOutOfRangeLabels) {
  Rng rng(2);
  const auto p = random_probs(4, 3, rng);
  EXPECT_THROW(ctc_loss(p, LabelSeq{0}), ParamError);
  EXPECT_THROW(ctc_loss(p, LabelSeq{3}), ParamError);
}

TEST(CtcLoss, ZeroProbabilityPathIsInfeasible) {
  Tensor<double> p({2, 2}, std::vector<double>{1.0, 0.0, 1.0, 0.0});
  EXPECT_THROW(ctc_loss(p, LabelSeq{1}), InfeasibleError);
}

TEST(CtcLoss, LongSequenceStaysFinite) {
  Rng rng(3);
  const auto p = random_probs(400, 30, rng);
  LabelSeq t(150);
  for (auto& v : t) v = 1 + static_cast<int>(uniform_index(rng, 29));
  const auto r = ctc_loss(p, t);
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_GT(r.loss, 0.0);
  EXPECT_TRUE(r.grad.all_finite());
}

TEST(CtcLoss, GradientMatchesCentralDifferences) {
  Rng rng(4);
  for (int n = 0; n < 25; ++n) {
    const std::size_t classes = 2 + uniform_index(rng, 4);
    const std::size_t steps = 3 + uniform_index(rng, 6);
    LabelSeq target = random_target(rng, classes, 3);
    while (ctc_required_length(target) > steps) target.pop_back();
    auto logits = random_tensor({steps, classes}, rng, -2.0, 2.0);
    auto loss = [&] { return ctc_loss_from_log_probs(log_softmax(logits), target).loss; };
    const auto grad = ctc_loss_from_log_probs(log_softmax(logits), target).grad;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const double numeric = central_difference(logits, i, loss);
      EXPECT_LE(relative_error(grad[i], numeric), kGradTolerance) << "instance " << n << " index " << i;
    }
  }
}

TEST(CtcLoss, ProbsAndLogProbsEntryPointsAgree) {
  Rng rng(5);
  const auto logits = random_tensor({6, 4}, rng);
  const auto probs = softmax_rows(logits);
  const LabelSeq t{1, 3};
  const auto a = ctc_loss(probs, t);
  const auto b = ctc_loss_from_log_probs(log_softmax(logits), t);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  for (std::size_t i = 0; i < a.grad.size(); ++i) EXPECT_NEAR(a.grad[i], b.grad[i], 1e-12);
}

TEST(CtcLoss, GradientRowsSumToZero) {
  Rng rng(6);
  const auto r = ctc_loss(random_probs(7, 5, rng), LabelSeq{2, 4, 2});
  for (std::size_t t = 0; t < 7; ++t) {
    double s = 0.0;
    for (double v : r.grad.row(t)) s += v;
    EXPECT_NEAR(s, 0.0, 1e-12);
  }
}

TEST(CtcLoss, FloatAgreesWithDouble) {
  Rng rng(7);
  const auto p = random_probs(20, 6, rng);
  const LabelSeq t{1, 2, 3, 4, 5};
  EXPECT_NEAR(ctc_loss(p.cast<float>(), t).loss, ctc_loss(p, t).loss, 1e-4);
}

TEST(Collapse, WorkedExample) {
  // A=1, B=2, C=3, blank=0: "AA--B--CA--A-"
  const LabelSeq path{1, 1, 0, 0, 2, 0, 0, 3, 1, 0, 0, 1, 0};
  EXPECT_EQ(collapse(path), (LabelSeq{1, 2, 3, 1, 1}));
}

TEST(Collapse, ExpansionRoundTrip) {
  Rng rng(8);
  for (int n = 0; n < 1000; ++n) {
    LabelSeq s(uniform_index(rng, 8));
    for (auto& v : s) v = 1 + static_cast<int>(uniform_index(rng, 4));
    LabelSeq path;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t b = uniform_index(rng, 3); b > 0; --b) path.push_back(kBlank);
      if (i > 0 && s[i] == s[i - 1]) path.push_back(kBlank);
      for (std::size_t r = 1 + uniform_index(rng, 3); r > 0; --r) path.push_back(s[i]);
    }
    for (std::size_t b = uniform_index(rng, 3); b > 0; --b) path.push_back(kBlank);
    ASSERT_EQ(collapse(path), s);
  }
}

TEST(Collapse, EdgeCases) {
  EXPECT_TRUE(collapse(LabelSeq{}).empty());
  EXPECT_TRUE(collapse(LabelSeq{0, 0, 0}).empty());
  EXPECT_EQ(collapse(LabelSeq{2, 2, 2}), (LabelSeq{2}));
}

TEST(GreedyDecode, PositionsAndConfidences) {
  // argmax path: 1 1 0 2 0 0 2
  Tensor<double> p({7, 3}, std::vector<double>{0.1, 0.8, 0.1,  //
                                               0.2, 0.6, 0.2,  //
                                               0.7, 0.2, 0.1,  //
                                               0.1, 0.1, 0.8,  //
                                               0.9, 0.05, 0.05,  //
                                               0.5, 0.25, 0.25,  //
                                               0.3, 0.3, 0.4});
  const auto r = greedy_decode(p);
  EXPECT_EQ(r.labels, (LabelSeq{1, 2, 2}));
  ASSERT_EQ(r.positions.size(), 3u);
  EXPECT_EQ(r.positions[0], (std::pair<std::size_t, std::size_t>{0, 2}));
  EXPECT_EQ(r.positions[2], (std::pair<std::size_t, std::size_t>{6, 7}));
  EXPECT_NEAR(r.confidences[0], 0.7, 1e-12);
  EXPECT_NEAR(r.confidences[2], 0.4, 1e-12);
}

TEST(GreedyDecode, TiesGoToLowestIndex) {
  Tensor<double> p({2, 3}, std::vector<double>{0.4, 0.4, 0.2, 0.2, 0.4, 0.4});
  EXPECT_EQ(greedy_decode(p).labels, (LabelSeq{1}));
}

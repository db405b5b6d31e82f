// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <json.hpp>

#include "lineocr/datagen.hpp"
#include "lineocr/predict.hpp"
#include "lineocr/train.hpp"
#include "lineocr/utf8.hpp"
#include "support.hpp"

using namespace lineocr;

namespace {

LineImage blank_line(std::size_t raw_width) {
  return preprocess_image(GrayImage{24, raw_width, std::vector<std::uint8_t>(24 * raw_width, 255)});
}

Model small_model(std::u32string chars, std::uint64_t seed) {
  return Model::create(parse_spec("C(4),Mp(2x2),LSTM(6)"), Codec(std::move(chars)), seed);
}

LineSample render_sample(const std::string& text) {
  const auto r = render_line(text, GlyphFont::standard(), NoiseParams{}, 1);
  return {text, preprocess_image(r.image), r.text};
}

// Trains a tiny network until it reads its single training line.
const Model& hello_model() {
  static const Model model = [] {
    Dataset ds;
    ds.samples.push_back(render_sample("hello"));
    TrainConfig cfg;
    cfg.spec = "C(8),Mp(2x2),LSTM(16)";
    cfg.dropout = 0.0;
    cfg.checkpoint_interval = 50;
    cfg.max_iterations = 3000;
    cfg.batch_size = 1;
    cfg.learning_rate = 0.003;
    cfg.target_cer = 0.0;
    return train_loop(ds, ds, cfg).model;
  }();
  return model;
}

}  // namespace

TEST(Voting, SummedConfidenceOverridesMajority) {
  // Columns: blank, I, l. Two of three voters prefer I, the sum prefers l.
  const std::vector<std::pair<float, float>> votes{{0.6f, 0.4f}, {0.55f, 0.45f}, {0.2f, 0.8f}};
  std::vector<ProbMatrix<float>> ms;
  std::vector<std::vector<int>> remaps;
  std::size_t majority_i = 0;
  for (const auto& [i, l] : votes) {
    ms.push_back(ProbMatrix<float>({1, 3}, std::vector<float>{0.0f, i, l}));
    remaps.push_back({0, 1, 2});
    majority_i += i > l;
  }
  EXPECT_EQ(majority_i, 2u);
  const auto voted = vote_matrices(ms, remaps, 3);
  EXPECT_NEAR(voted.at(0, 1), 1.35f / 3, 1e-6);
  EXPECT_NEAR(voted.at(0, 2), 1.65f / 3, 1e-6);
  const Codec codec(U"Il");
  EXPECT_EQ(decode_prediction(voted, codec, blank_line(10), 1, false).text, "l");
}

TEST(Voting, UnionCodecRemapsColumns) {
  const Model a = small_model(U"ab", 1), b = small_model(U"bc", 2);
  const Ensemble e({&a, &b});
  EXPECT_EQ(e.codec().chars(), U"abc");
  EXPECT_EQ(e.remap(0), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(e.remap(1), (std::vector<int>{0, 2, 3}));
  // Character absent from a voter contributes zero.
  const ProbMatrix<float> pa({1, 3}, std::vector<float>{0.1f, 0.9f, 0.0f});
  const ProbMatrix<float> pb({1, 3}, std::vector<float>{0.2f, 0.0f, 0.8f});
  const auto v = vote_matrices({pa, pb}, {e.remap(0), e.remap(1)}, 4);
  EXPECT_NEAR(v.at(0, 1), 0.45f, 1e-6);
  EXPECT_NEAR(v.at(0, 3), 0.4f, 1e-6);
}

TEST(Voting, RowsStayNormalizedAndArgmaxScaleInvariant) {
  Rng rng(1);
  for (int n = 0; n < 100; ++n) {
    std::vector<ProbMatrix<float>> ms;
    std::vector<std::vector<int>> remaps;
    const std::size_t voters = 1 + uniform_index(rng, 4);
    for (std::size_t v = 0; v < voters; ++v) {
      ms.push_back(testsupport::random_probs(5, 4, rng).cast<float>());
      remaps.push_back({0, 1, 2, 3});
    }
    const auto avg = vote_matrices(ms, remaps, 4);
    for (std::size_t t = 0; t < 5; ++t) {
      float s = 0;
      for (float x : avg.row(t)) s += x;
      ASSERT_NEAR(s, 1.0f, 1e-5);
    }
    auto scaled = ms;
    for (auto& m : scaled)
      for (auto& x : m.data()) x *= 3.0f;
    ASSERT_EQ(greedy_decode(vote_matrices(scaled, remaps, 4)).labels, greedy_decode(avg).labels);
  }
}

TEST(Voting, LengthMismatchIsExplicitError) {
  const ProbMatrix<float> a({3, 2}, 0.5f), b({4, 2}, 0.5f);
  EXPECT_THROW(vote_matrices({a, b}, {{0, 1}, {0, 1}}, 2), ShapeError);
  const Model m1 = small_model(U"a", 1);
  const Model m2 = Model::create(parse_spec("C(4),Mp(1x2),LSTM(6)"), Codec(U"a"), 1);
  EXPECT_THROW(Ensemble({&m1, &m2}), ShapeError);
}

TEST(Voting, SingletonAndIdenticalEnsemblesMatchSingleModel) {
  const Model& m = hello_model();
  const auto line = render_sample("hello").image;
  const auto single = predict_line(m, line, true);
  const auto one = vote_confidence(Ensemble({&m}), line, true);
  EXPECT_EQ(one.text, single.text);
  EXPECT_EQ(*one.probs, *single.probs);
  const auto three = vote_confidence(Ensemble({&m, &m, &m}), line);
  EXPECT_EQ(three.text, single.text);
}

TEST(Predict, OverfitModelReadsItsLineWithOrderedPositions) {
  const Model& m = hello_model();
  const auto sample = render_sample("hello");
  const auto p = predict_line(m, sample.image, true);
  ASSERT_EQ(p.text, "hello");
  ASSERT_EQ(p.chars.size(), 5u);
  std::string joined;
  double last_end = 0.0;
  for (const auto& c : p.chars) {
    joined += c.ch;
    EXPECT_GT(c.confidence, 0.0);
    EXPECT_LE(c.confidence, 1.0);
    EXPECT_LT(c.start_t, c.end_t);
    EXPECT_LE(c.start_px, c.end_px);
    EXPECT_GE(c.start_px, last_end - 1e-9);
    EXPECT_LE(c.end_px, static_cast<double>(sample.image.source_width));
    last_end = c.end_px;
  }
  EXPECT_EQ(joined, p.text);
}

TEST(Predict, ExtendedFlagOnlyAddsDetail) {
  const Model& m = hello_model();
  const auto line = render_sample("hello").image;
  const auto plain = predict_line(m, line, false);
  const auto ext = predict_line(m, line, true);
  EXPECT_EQ(plain.text, ext.text);
  EXPECT_FALSE(plain.probs.has_value());
  EXPECT_TRUE(plain.chars.empty());
  ASSERT_TRUE(ext.probs.has_value());
  const auto j = nlohmann::json::parse(prediction_json(ext));
  EXPECT_EQ(j.at("text"), "hello");
  EXPECT_EQ(j.at("chars").size(), 5u);
  EXPECT_EQ(j.at("probabilities").size(), ext.probs->dim(0));
}

TEST(Predict, BlankDominatedMatrixGivesEmptyText) {
  ProbMatrix<float> p({6, 3}, std::vector<float>(18, 0.1f));
  for (std::size_t t = 0; t < 6; ++t) p.at(t, 0) = 0.8f;
  const auto r = decode_prediction(p, Codec(U"xy"), blank_line(20), 4, true);
  EXPECT_EQ(r.text, "");
  EXPECT_TRUE(r.chars.empty());
}

TEST(Predict, PixelPositionsMapBackToRawImage) {
  // Raw height 24 -> scale 2; timestep t covers padded columns [4t, 4t+4).
  ProbMatrix<float> p({30, 2}, std::vector<float>(60, 0.0f));
  for (std::size_t t = 0; t < 30; ++t) p.at(t, t >= 10 && t < 12 ? 1 : 0) = 1.0f;
  const auto r = decode_prediction(p, Codec(U"x"), blank_line(44), 4, true);
  ASSERT_EQ(r.chars.size(), 1u);
  EXPECT_DOUBLE_EQ(r.chars[0].start_px, (40.0 - 16.0) / 2.0);
  EXPECT_DOUBLE_EQ(r.chars[0].end_px, (48.0 - 16.0) / 2.0);
}

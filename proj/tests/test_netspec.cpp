// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "lineocr/netspec.hpp"
#include "lineocr/network.hpp"
#include "support.hpp"

using namespace lineocr;
using L = LayerSpec;

TEST(ParseSpec, DefaultArchitecture) {
  const auto s = parse_spec("C,Mp(2x2),C,Mp(2x2),LSTM(200)");
  const std::vector<L> want{L::conv(64), L::pool(2, 2), L::conv(128), L::pool(2, 2), L::lstm(200)};
  EXPECT_EQ(s.layers, want);
  EXPECT_EQ(s.horizontal_downsampling(), 4u);
  EXPECT_EQ(s.vertical_downsampling(), 4u);
  EXPECT_EQ(s.source, "C,Mp(2x2),C,Mp(2x2),LSTM(200)");
}

TEST(ParseSpec, PublishedArchitectureStrings) {
  EXPECT_EQ(parse_spec("LSTM(200)").layers, std::vector<L>{L::lstm(200)});
  EXPECT_EQ(parse_spec("C, Mp(2x2), C, Mp(2x2), LSTM(200)").layers,
            (std::vector<L>{L::conv(64), L::pool(2, 2), L::conv(128), L::pool(2, 2), L::lstm(200)}));
  // 1x2 pooling halves the height only.
  const auto a = parse_spec("C, Mp(1x2), C, Mp(1x2), LSTM(200)");
  EXPECT_EQ(a.layers, (std::vector<L>{L::conv(64), L::pool(2, 1), L::conv(128), L::pool(2, 1), L::lstm(200)}));
  EXPECT_EQ(a.horizontal_downsampling(), 1u);
  EXPECT_EQ(a.vertical_downsampling(), 4u);
  EXPECT_EQ(parse_spec("C, Mp(1x2), C, Mp(1x2), LSTM(100)").layers.back(), L::lstm(100));
  const auto b = parse_spec("C, Mp(1x2), C, Mp(1x2), C, Mp(1x2), LSTM(200)");
  EXPECT_EQ(b.layers.size(), 7u);
  EXPECT_EQ(b.layers[4], L::conv(256));
  EXPECT_EQ(b.vertical_downsampling(), 8u);
}

TEST(ParseSpec, CaseAndWhitespaceInsensitive) {
  EXPECT_EQ(parse_spec(" c , mp(2X2) ,lstm( 20 ) "), parse_spec("C,Mp(2x2),LSTM(20)"));
}

TEST(ParseSpec, FilterSequenceAndExplicitCounts) {
  const std::vector<int> f{8, 16};
  const auto s = parse_spec("C,Mp(2x2),C,Mp(2x2),LSTM(32)", f);
  EXPECT_EQ(s.layers[0], L::conv(8));
  EXPECT_EQ(s.layers[2], L::conv(16));
  EXPECT_EQ(parse_spec("C,C,C", f).layers[2], L::conv(32));
  EXPECT_EQ(parse_spec("C(5),C").layers, (std::vector<L>{L::conv(5), L::conv(128)}));
}

TEST(ParseSpec, ErrorsNameTokenAndPosition) {
  auto expect_error = [](const char* text, std::size_t position) {
    try {
      parse_spec(text);
      ADD_FAILURE() << "no error for " << text;
    } catch (const SpecParseError& e) {
      EXPECT_EQ(e.position(), position) << text << ": " << e.what();
    }
  };
  expect_error("Mp(2x)", 1);
  expect_error("C,Foo", 2);
  expect_error("C,Mp(3x2)", 2);
  expect_error("LSTM(10),C", 2);
  expect_error("LSTM(10),Mp(2x2)", 2);
  expect_error("C,,LSTM(4)", 2);
  expect_error("C(x)", 1);
  expect_error("LSTM(0)", 1);
  expect_error("LSTM", 1);
  expect_error("C,Mp(2x2", 2);
  expect_error("", 1);
}

TEST(RenderSpec, CanonicalForm) {
  EXPECT_EQ(render_spec(parse_spec("c, mp(2x2), lstm(200)")), "C,Mp(2x2),LSTM(200)");
  EXPECT_EQ(render_spec(parse_spec("C(8),Mp(1x2),C(64)")), "C(8),Mp(1x2),C(64)");
  EXPECT_EQ(render_spec(parse_spec("C(8),C(128)")), "C(8),C");
  EXPECT_THROW(render_spec(NetworkSpec{}), ParamError);
}

TEST(RenderSpec, ParseRenderIdentityOnRandomSpecs) {
  Rng rng(42);
  for (int n = 0; n < 1000; ++n) {
    NetworkSpec s;
    const std::size_t convs = uniform_index(rng, 4);
    for (std::size_t i = 0; i < convs; ++i) {
      const int f = uniform01(rng) < 0.5 ? default_conv_filters(i) : 1 + static_cast<int>(uniform_index(rng, 300));
      s.layers.push_back(L::conv(f));
      if (uniform01(rng) < 0.6) {
        s.layers.push_back(L::pool(1 + static_cast<int>(uniform_index(rng, 2)),
                                   1 + static_cast<int>(uniform_index(rng, 2))));
      }
    }
    const std::size_t lstms = (s.layers.empty() ? 1 : 0) + uniform_index(rng, 3);
    for (std::size_t i = 0; i < lstms; ++i) s.layers.push_back(L::lstm(1 + static_cast<int>(uniform_index(rng, 400))));
    const std::string text = render_spec(s);
    const auto back = parse_spec(text);
    ASSERT_EQ(back, s) << text;
    ASSERT_EQ(render_spec(back), text);
  }
}

TEST(WidthCheck, FortyCharactersNeed320Pixels) {
  const auto s = parse_spec("C,Mp(2x2),C,Mp(2x2),LSTM(200)");
  EXPECT_EQ(heuristic_min_width(s, 40), 320u);
  std::vector<int> labels(40);
  for (std::size_t i = 0; i < 40; ++i) labels[i] = 1 + static_cast<int>(i % 7);
  const auto c = min_width_check(s, labels, 320);
  EXPECT_EQ(c.heuristic_timesteps, 80u);
  EXPECT_EQ(c.timesteps, 80u);
  EXPECT_TRUE(c.feasible);
}

TEST(WidthCheck, ExactBoundCountsDuplicates) {
  const auto s = parse_spec("LSTM(4)");
  const std::vector<int> ab{1, 2}, aa{1, 1};
  EXPECT_EQ(min_width_check(s, ab, 10).required_timesteps, 2u);
  EXPECT_EQ(min_width_check(s, aa, 10).required_timesteps, 3u);
  EXPECT_FALSE(min_width_check(s, aa, 2).feasible);
  EXPECT_TRUE(min_width_check(s, aa, 3).feasible);
}

TEST(WidthCheck, RequiredNeverExceedsHeuristic) {
  Rng rng(7);
  const auto s = parse_spec("C,Mp(2x2),LSTM(4)");
  for (int n = 0; n < 500; ++n) {
    std::vector<int> labels(1 + uniform_index(rng, 20));
    for (auto& v : labels) v = 1 + static_cast<int>(uniform_index(rng, 3));
    const auto c = min_width_check(s, labels, 100);
    bool all_dup = true;
    for (std::size_t i = 1; i < labels.size(); ++i) all_dup = all_dup && labels[i] == labels[i - 1];
    ASSERT_LE(c.required_timesteps, c.heuristic_timesteps);
    if (labels.size() > 1) ASSERT_EQ(c.required_timesteps == c.heuristic_timesteps - 1, all_dup);
  }
}

TEST(WidthCheck, DownsamplingMatchesNetworkOutputLength) {
  Rng rng(9);
  for (const char* text : {"C(2),Mp(2x2),C(2),Mp(2x2),LSTM(3)", "C(2),Mp(1x2),LSTM(3)", "LSTM(3)", "C(2),Mp(2x1),LSTM(2)"}) {
    const auto s = parse_spec(text);
    Network<float> net(s, 8, 3, 1);
    for (int n = 0; n < 5; ++n) {
      const std::size_t w = 4 + uniform_index(rng, 40);
      const auto out = net.forward(Tensor<float>({8, w, 1}, 0.1f));
      EXPECT_EQ(out.logits.dim(0), w / s.horizontal_downsampling()) << text << " width " << w;
    }
  }
}

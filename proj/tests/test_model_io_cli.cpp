// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "lineocr/cli.hpp"
#include "lineocr/datagen.hpp"
#include "lineocr/model.hpp"
#include "lineocr/predict.hpp"
#include "lineocr/train.hpp"

using namespace lineocr;
namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::temp_directory_path() / "lineocr_model_io_cli";

Model sample_model(std::uint64_t seed = 3) {
  Model m = Model::create(parse_spec("C(4),Mp(2x2),C(6),Mp(2x2),LSTM(5)"), Codec(U"abc xyz."), seed);
  m.hyper["learning_rate"] = 0.001;
  return m;
}

std::vector<LineImage> sample_lines_images(std::size_t n) {
  std::vector<LineImage> out;
  GenOptions o;
  o.count = n;
  const auto texts = sample_lines("abc xyz. zyx cab a.b.c xx yy zz", o);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(preprocess_image(render_line(texts[i], GlyphFont::standard(), NoiseParams::scaled(0.5), i).image));
  }
  return out;
}

// Rebuilds a model file with an edited header.
std::string with_header(const std::string& bytes, const std::function<void(nlohmann::json&)>& edit) {
  const auto first = bytes.find('\n');
  const auto second = bytes.find('\n', first + 1);
  const std::size_t len = std::stoul(bytes.substr(first + 1, second - first - 1));
  auto header = nlohmann::json::parse(bytes.substr(second + 1, len));
  edit(header);
  const std::string h = header.dump();
  return bytes.substr(0, first + 1) + std::to_string(h.size()) + "\n" + h + bytes.substr(second + 1 + len);
}

ModelFormatError::Kind kind_of(const std::string& bytes) {
  try {
    deserialize_model(bytes);
  } catch (const ModelFormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ModelFormatError::Kind::Io;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "lineocr");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kTmp);
    fs::create_directories(kTmp);
    const auto corpus = (fs::path(LINEOCR_SOURCE_DIR) / "data" / "corpus.txt").string();
    ASSERT_EQ(run({"datagen", "--text", corpus, "--out", (kTmp / "data").string(), "--count", "12", "--seed", "2"}),
              kExitOk);
  }
  static void TearDownTestSuite() { fs::remove_all(kTmp); }

  static std::vector<std::string> quick_train_flags() {
    return {"--data", (kTmp / "data").string(), "--spec", "C(4),Mp(2x2),LSTM(8)", "--max-iterations", "6",
            "--checkpoint-interval", "3"};
  }
};

}  // namespace

TEST(ModelIo, RoundTripPreservesWeightsAndPredictionsBitwise) {
  const Model m = sample_model();
  const Model back = deserialize_model(serialize_model(m));
  EXPECT_EQ(back.spec, m.spec);
  EXPECT_EQ(back.codec, m.codec);
  EXPECT_EQ(back.hyper, m.hyper);
  ASSERT_EQ(back.network.params().size(), m.network.params().size());
  for (std::size_t i = 0; i < m.network.params().size(); ++i) {
    for (const auto& [role, w] : m.network.params()[i].weights) EXPECT_EQ(back.network.params()[i].weight(role), w);
  }
  for (const auto& line : sample_lines_images(10)) {
    const auto a = predict_line(m, line, true), b = predict_line(back, line, true);
    EXPECT_EQ(a.text, b.text);
    EXPECT_EQ(*a.probs, *b.probs);
  }
}

TEST(ModelIo, SaveIsDeterministicAndAtomic) {
  fs::create_directories(kTmp);
  const Model m = sample_model();
  save_model(m, kTmp / "a.lom");
  save_model(m, kTmp / "b.lom");
  EXPECT_EQ(slurp(kTmp / "a.lom"), slurp(kTmp / "b.lom"));
  EXPECT_FALSE(fs::exists(kTmp / "a.lom.tmp"));
  const fs::path bad = kTmp / "missing_dir" / "m.lom";
  EXPECT_THROW(save_model(m, bad), ModelFormatError);
  EXPECT_FALSE(fs::exists(bad));
  EXPECT_EQ(load_model(kTmp / "a.lom").codec, m.codec);
  fs::remove_all(kTmp);
}

TEST(ModelIo, HeaderIsReadableText) {
  const std::string bytes = serialize_model(sample_model());
  EXPECT_EQ(bytes.substr(0, 16), "LINEOCR-MODEL 1\n");
  bool saw_spec = false;
  with_header(bytes, [&](nlohmann::json& h) { saw_spec = h.at("spec") == "C(4),Mp(2x2),C(6),Mp(2x2),LSTM(5)"; });
  EXPECT_TRUE(saw_spec);
}

TEST(ModelIo, DistinctErrorKinds) {
  using K = ModelFormatError::Kind;
  const std::string bytes = serialize_model(sample_model());
  EXPECT_EQ(kind_of("hello world"), K::NotAModel);
  EXPECT_EQ(kind_of(bytes.substr(0, bytes.size() - 10)), K::Truncated);
  std::string v2 = bytes;
  v2[14] = '2';
  EXPECT_EQ(kind_of(v2), K::VersionMismatch);
  EXPECT_EQ(kind_of(with_header(bytes, [](nlohmann::json& h) { h["tensors"][0]["name"] = "mystery.kernel"; })),
            K::UnknownTensor);
  EXPECT_EQ(kind_of(with_header(bytes, [](nlohmann::json& h) { h["tensors"].erase(h["tensors"].size() - 1); })),
            K::MissingTensor);
  EXPECT_THROW(load_model("/nonexistent/model.lom"), ModelFormatError);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), kExitUsage);
  EXPECT_EQ(run({"train", "--bogus-flag"}), kExitUsage);
  EXPECT_EQ(run({"frobnicate"}), kExitUsage);
  EXPECT_EQ(run({"--help"}), kExitOk);
  auto flags = quick_train_flags();
  flags[3] = "C,Mp(3x3)";
  flags.insert(flags.begin(), "train");
  EXPECT_EQ(run(flags), kExitUsage);
}

TEST_F(CliTest, DataErrors) {
  EXPECT_EQ(run({"train", "--data", (kTmp / "nowhere").string()}), kExitData);
  EXPECT_EQ(run({"predict", "--model", (kTmp / "nope.lom").string(), "--data", (kTmp / "data").string()}), kExitData);
  fs::create_directories(kTmp / "empty_pred");
  EXPECT_EQ(run({"eval", "--gt", (kTmp / "data").string(), "--pred", (kTmp / "empty_pred").string()}), kExitData);
}

TEST_F(CliTest, InfeasibleWidthIsNumericalError) {
  std::vector<std::string> args{"train", "--data", (kTmp / "data").string(), "--spec",
                                "C(2),Mp(2x2),C(2),Mp(2x2),C(2),Mp(2x2),C(2),Mp(2x2),LSTM(4)", "--max-iterations",
                                "2"};
  EXPECT_EQ(run(args), kExitNumerical);
}

TEST_F(CliTest, TrainPredictEvalBenchPipeline) {
  auto flags = quick_train_flags();
  flags.insert(flags.begin(), "train");
  flags.push_back("--output");
  flags.push_back((kTmp / "m.lom").string());
  ASSERT_EQ(run(flags), kExitOk);
  const Model m = load_model(kTmp / "m.lom");
  EXPECT_EQ(m.hyper.at("batch_size"), 5.0);
  EXPECT_EQ(m.hyper.at("learning_rate"), 0.001);

  ASSERT_EQ(run({"predict", "--model", (kTmp / "m.lom").string(), "--data", (kTmp / "data").string(), "--output",
                 (kTmp / "pred").string(), "--extended"}),
            kExitOk);
  EXPECT_TRUE(fs::exists(kTmp / "pred" / "line_0000.pred.txt"));
  const auto ext = nlohmann::json::parse(slurp(kTmp / "pred" / "line_0000.pred.ext"));
  EXPECT_TRUE(ext.contains("chars"));

  // Voting with the same model twice gives the same text.
  ASSERT_EQ(run({"predict", "--model", (kTmp / "m.lom").string(), "--model", (kTmp / "m.lom").string(), "--data",
                 (kTmp / "data").string(), "--output", (kTmp / "voted").string()}),
            kExitOk);
  EXPECT_EQ(slurp(kTmp / "voted" / "line_0003.pred.txt"), slurp(kTmp / "pred" / "line_0003.pred.txt"));

  ASSERT_EQ(run({"eval", "--gt", (kTmp / "data").string(), "--pred", (kTmp / "pred").string(), "--json",
                 (kTmp / "report.json").string()}),
            kExitOk);
  EXPECT_TRUE(fs::exists(kTmp / "report.json"));

  testing::internal::CaptureStdout();
  const int bench = run({"bench", "--model", (kTmp / "m.lom").string(), "--data", (kTmp / "data").string()});
  const std::string out = testing::internal::GetCapturedStdout();
  EXPECT_EQ(bench, kExitOk);
  EXPECT_NE(out.find("predict ms/line"), std::string::npos) << out;
  EXPECT_NE(out.find("train ms/line"), std::string::npos) << out;
}

TEST_F(CliTest, EvalOfGroundTruthAgainstItselfIsZero) {
  const fs::path pred = kTmp / "self";
  fs::create_directories(pred);
  for (const auto& e : fs::directory_iterator(kTmp / "data")) {
    const std::string name = e.path().filename().string();
    if (name.ends_with(".gt.txt")) fs::copy_file(e.path(), pred / (name.substr(0, name.size() - 7) + ".pred.txt"));
  }
  testing::internal::CaptureStdout();
  const int code = run({"eval", "--gt", (kTmp / "data").string(), "--pred", pred.string(), "--json",
                        (kTmp / "self.json").string()});
  testing::internal::GetCapturedStdout();
  EXPECT_EQ(code, kExitOk);
  EXPECT_EQ(nlohmann::json::parse(slurp(kTmp / "self.json")).at("corpus_cer").get<double>(), 0.0);
}

TEST_F(CliTest, FinetuneAndFolds) {
  auto flags = quick_train_flags();
  flags.insert(flags.begin(), "train");
  flags.push_back("--output");
  flags.push_back((kTmp / "base.lom").string());
  ASSERT_EQ(run(flags), kExitOk);

  const auto corpus = (fs::path(LINEOCR_SOURCE_DIR) / "data" / "corpus.txt").string();
  ASSERT_EQ(run({"datagen", "--text", corpus, "--out", (kTmp / "fontb").string(), "--count", "8", "--font", "b",
                 "--umlaut-rate", "0.5"}),
            kExitOk);
  auto ft = quick_train_flags();
  ft[1] = (kTmp / "fontb").string();
  ft.insert(ft.begin(), "finetune");
  for (const char* a : {"--base", "", "--output", "", "--whitelist", "xyz"}) ft.push_back(a);
  ft[ft.size() - 5] = (kTmp / "base.lom").string();
  ft[ft.size() - 3] = (kTmp / "ft.lom").string();
  ASSERT_EQ(run(ft), kExitOk);
  const Model tuned = load_model(kTmp / "ft.lom");
  EXPECT_TRUE(tuned.codec.contains(U'ä') || tuned.codec.contains(U'ö'));

  auto folds = quick_train_flags();
  folds.insert(folds.begin(), "folds");
  for (const char* a : {"--k", "2", "--output-dir"}) folds.push_back(a);
  folds.push_back((kTmp / "folds").string());
  ASSERT_EQ(run(folds), kExitOk);
  EXPECT_TRUE(fs::exists(kTmp / "folds" / "fold0.lom"));
  EXPECT_TRUE(fs::exists(kTmp / "folds" / "fold1.lom"));
}

TEST(CliBinary, ExitCodeReachesTheShell) {
  const std::string cmd = std::string(LINEOCR_CLI_PATH) + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), kExitUsage);
}

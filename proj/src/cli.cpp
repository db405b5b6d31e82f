// SPDX-License-Identifier: Apache-2.0
#include "lineocr/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lineocr/datagen.hpp"
#include "lineocr/eval.hpp"
#include "lineocr/parallel.hpp"
#include "lineocr/predict.hpp"
#include "lineocr/train.hpp"
#include "lineocr/utf8.hpp"

namespace lineocr {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct TrainArgs {
  TrainConfig cfg;
  std::string data;
  std::string output = "model.lom";
  std::string rules;
  std::vector<int> filters;
  double target_cer = -1.0;
};

void add_train_flags(CLI::App* app, TrainArgs& a) {
  app->add_option("--data", a.data, "Directory of <name>.pgm + <name>.gt.txt pairs")->required();
  app->add_option("--spec", a.cfg.spec, "Network spec string")->capture_default_str();
  app->add_option("--filters", a.filters, "Conv filter counts, in order (default 64,128,...)")->delimiter(',');
  app->add_option("--batch", a.cfg.batch_size, "Lines per iteration")->capture_default_str();
  app->add_option("--lr", a.cfg.learning_rate, "Adam learning rate")->capture_default_str();
  app->add_option("--checkpoint-interval", a.cfg.checkpoint_interval, "Iterations between validation checks")
      ->capture_default_str();
  app->add_option("--patience", a.cfg.patience, "Non-improving checks before stopping")->capture_default_str();
  app->add_option("--val-fraction", a.cfg.validation_fraction, "Held-out fraction for early stopping")
      ->capture_default_str();
  app->add_option("--seed", a.cfg.seed, "Random seed")->capture_default_str();
  app->add_option("--clip", a.cfg.clip_norm, "Global gradient norm cap")->capture_default_str();
  app->add_option("--dropout", a.cfg.dropout, "Dropout rate before the output layer")->capture_default_str();
  app->add_option("--max-iterations", a.cfg.max_iterations, "Iteration cap (0: 100 checkpoint intervals)")
      ->capture_default_str();
  app->add_option("--target-cer", a.target_cer, "Stop at the first check at or below this CER");
  app->add_option("--jobs", a.cfg.jobs, "Worker threads")->capture_default_str();
  app->add_option("--rules", a.rules, "Text normalization rules (TAB-separated from/to lines)");
  app->add_flag("--verbose,-v", a.cfg.verbose, "Log progress to stderr");
}

TextNormRules load_rules(const std::string& path) { return path.empty() ? TextNormRules{} : TextNormRules::load(path); }

void finish_config(TrainArgs& a) {
  a.cfg.conv_filters = a.filters;
  if (a.target_cer >= 0.0) a.cfg.target_cer = a.target_cer;
  a.cfg.validate();
}

void print_report(const TrainReport& r, std::ostream& out) {
  out << "iterations " << r.iterations << "\n";
  out << "checks " << r.history.size() << ", best check " << r.best_check + 1 << " (iteration "
      << (r.check_iterations.empty() ? 0 : r.check_iterations[r.best_check]) << ")\n";
  out << "best validation CER " << r.best_cer << "\n";
  if (r.skipped_lines) out << "skipped lines " << r.skipped_lines << "\n";
  out << "wall seconds " << r.wall_seconds << "\n";
  if (!r.model_path.empty()) out << "model " << r.model_path << "\n";
}

int run_train(TrainArgs& a) {
  finish_config(a);
  const Dataset ds = load_dataset(a.data, load_rules(a.rules));
  const Split split = split_train_val(ds, a.cfg.validation_fraction, a.cfg.seed);
  TrainResult res = train_loop(split.train, split.val, a.cfg);
  save_model(res.model, a.output);
  res.report.model_path = a.output;
  print_report(res.report, std::cout);
  return kExitOk;
}

int run_finetune(TrainArgs& a, const std::string& base_path, const std::string& whitelist, bool keep_all) {
  finish_config(a);
  const Model base = load_model(base_path);
  const Dataset ds = load_dataset(a.data, load_rules(a.rules));
  TrainResult res = finetune(base, ds, utf8::decode(whitelist), keep_all, a.cfg);
  save_model(res.model, a.output);
  res.report.model_path = a.output;
  print_report(res.report, std::cout);
  return kExitOk;
}

int run_folds(TrainArgs& a, std::size_t k, const std::string& out_dir) {
  finish_config(a);
  const Dataset ds = load_dataset(a.data, load_rules(a.rules));
  const auto folds = make_folds(ds, k, a.cfg.seed);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < folds.size(); ++i) {
    TrainConfig cfg = a.cfg;
    cfg.seed = derive_seed(a.cfg.seed, i);
    TrainResult res = train_loop(folds[i].train, folds[i].val, cfg);
    const fs::path path = fs::path(out_dir) / ("fold" + std::to_string(i) + ".lom");
    save_model(res.model, path);
    res.report.model_path = path.string();
    std::cout << "fold " << i << "\n";
    print_report(res.report, std::cout);
  }
  return kExitOk;
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("directory " + dir.string() + " does not exist");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no .pgm images in " + dir.string());
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw DataError("cannot write " + path.string());
}

int run_predict(const std::vector<std::string>& model_paths, const std::string& data, std::string output,
                bool extended, std::size_t jobs) {
  std::vector<Model> models;
  models.reserve(model_paths.size());
  for (const auto& p : model_paths) models.push_back(load_model(p));
  std::vector<const Model*> ptrs;
  for (const auto& m : models) ptrs.push_back(&m);
  const Ensemble ensemble(ptrs);

  const auto images = list_images(data);
  if (output.empty()) output = data;
  fs::create_directories(output);
  parallel_for(images.size(), jobs, [&](std::size_t i) {
    const LineImage line = preprocess_image(read_pgm(images[i]));
    const Prediction pred =
        models.size() == 1 ? predict_line(models[0], line, extended) : vote_confidence(ensemble, line, extended);
    const std::string stem = images[i].stem().string();
    write_file(fs::path(output) / (stem + ".pred.txt"), pred.text + "\n");
    if (extended) write_file(fs::path(output) / (stem + ".pred.ext"), prediction_json(pred) + "\n");
  });
  std::cout << "predicted " << images.size() << " lines with " << models.size() << " model(s)\n";
  return kExitOk;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_eval(const std::string& gt_dir, const std::string& pred_dir, std::size_t top_n, std::size_t worst_n,
             const std::string& rules_path, const std::string& json_path) {
  const TextNormRules rules = load_rules(rules_path);
  if (!fs::is_directory(gt_dir)) throw DataError("directory " + gt_dir + " does not exist");
  std::vector<fs::path> gts;
  for (const auto& e : fs::directory_iterator(gt_dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > 7 && name.ends_with(".gt.txt")) gts.push_back(e.path());
  }
  std::sort(gts.begin(), gts.end());
  if (gts.empty()) throw DataError("no .gt.txt files in " + gt_dir);
  std::vector<LinePair> pairs;
  for (const auto& g : gts) {
    const std::string fname = g.filename().string();
    const std::string stem = fname.substr(0, fname.size() - 7);
    const fs::path p = fs::path(pred_dir) / (stem + ".pred.txt");
    if (!fs::exists(p)) throw DataError("missing prediction for " + stem);
    pairs.push_back({preprocess_text(read_file(g), rules), preprocess_text(read_file(p), rules), stem});
  }
  const EvalReport report = evaluate(pairs, top_n, worst_n);
  std::cout << format_report(report);
  if (!json_path.empty()) write_file(json_path, report_json(report) + "\n");
  return kExitOk;
}

int run_datagen(const std::string& text_path, const std::string& out, GenOptions opts, double noise,
                const std::string& font_name, long long text_seed) {
  opts.noise = NoiseParams::scaled(noise);
  if (text_seed >= 0) opts.text_seed = static_cast<std::uint64_t>(text_seed);
  GlyphFont font;
  if (font_name == "a") font = GlyphFont::standard();
  else if (font_name == "b") font = GlyphFont::alternate();
  else throw ParamError("unknown font '" + font_name + "' (expected a or b)");
  const auto truths = gen_dataset(read_file(text_path), font, opts, out);
  std::cout << "wrote " << truths.size() << " lines to " << out << "\n";
  return kExitOk;
}

int run_bench(const std::string& model_path, const std::string& data, std::size_t repeats) {
  const Model model = load_model(model_path);
  const Dataset ds = load_dataset(fs::path(data));
  repeats = std::max<std::size_t>(1, repeats);

  const auto t0 = Clock::now();
  std::size_t predicted = 0;
  for (std::size_t r = 0; r < repeats; ++r) {
    for (const auto& s : ds.samples) {
      predict_line(model, s.image);
      ++predicted;
    }
  }
  const double predict_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / predicted;

  Model work = model;
  AdamState<float> adam;
  TrainConfig cfg;
  std::vector<const LineSample*> batch;
  std::vector<LabelSeq> targets;
  for (const auto& s : ds.samples) {
    // Lines the model cannot be trained on (unknown characters, too narrow) are only timed for prediction.
    LabelSeq t;
    try {
      t = encode(s.text, work.codec);
    } catch (const DataError&) {
      continue;
    }
    if (!min_width_check(work.spec, t, s.image.width).feasible) continue;
    batch.push_back(&s);
    targets.push_back(std::move(t));
  }
  double train_ms = 0.0;
  if (!batch.empty()) {
    const auto t1 = Clock::now();
    std::size_t trained = 0;
    for (std::size_t r = 0; r < repeats; ++r) {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        train_step(work, adam, {batch[i]}, {targets[i]}, cfg, derive_seed(cfg.seed, trained));
        ++trained;
      }
    }
    train_ms = std::chrono::duration<double, std::milli>(Clock::now() - t1).count() / trained;
  }
  std::cout << "lines " << ds.size() << "\n";
  std::cout << "predict ms/line " << predict_ms << "\n";
  std::cout << "predict lines/s " << (predict_ms > 0 ? 1000.0 / predict_ms : 0.0) << "\n";
  std::cout << "train ms/line " << train_ms << "\n";
  return kExitOk;
}

}  // namespace

int cli_dispatch(int argc, char** argv) {
  CLI::App app{"Text line recognition: train, predict, vote, evaluate"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model from line images and ground truth");
  add_train_flags(train, train_args);
  train->add_option("--output", train_args.output, "Model file to write")->capture_default_str();

  TrainArgs ft_args;
  std::string ft_base, ft_whitelist;
  bool ft_keep_all = false;
  auto* ft = app.add_subcommand("finetune", "Adapt an existing model to new data and characters");
  add_train_flags(ft, ft_args);
  ft->add_option("--output", ft_args.output, "Model file to write")->capture_default_str();
  ft->add_option("--base", ft_base, "Model to start from")->required();
  ft->add_option("--whitelist", ft_whitelist, "Characters never removed from the codec");
  ft->add_flag("--keep-all", ft_keep_all, "Keep every base character");

  TrainArgs fold_args;
  std::size_t fold_k = 5;
  std::string fold_dir = "folds";
  auto* folds = app.add_subcommand("folds", "Train k cross-fold voters");
  add_train_flags(folds, fold_args);
  folds->add_option("--k", fold_k, "Number of folds")->capture_default_str();
  folds->add_option("--output-dir", fold_dir, "Directory for fold<i>.lom")->capture_default_str();

  std::vector<std::string> pred_models;
  std::string pred_data, pred_out;
  bool pred_ext = false;
  std::size_t pred_jobs = 1;
  auto* predict = app.add_subcommand("predict", "Transcribe line images; several models vote");
  predict->add_option("--model", pred_models, "Model file (repeat to vote)")->required();
  predict->add_option("--data", pred_data, "Directory of .pgm line images")->required();
  predict->add_option("--output", pred_out, "Output directory (default: --data)");
  predict->add_flag("--extended", pred_ext, "Also write per-character positions and confidences");
  predict->add_option("--jobs", pred_jobs, "Worker threads")->capture_default_str();

  std::string ev_gt, ev_pred, ev_rules, ev_json;
  std::size_t ev_top = 10, ev_worst = 10;
  auto* eval = app.add_subcommand("eval", "Compare predictions against ground truth");
  eval->add_option("--gt", ev_gt, "Directory of <name>.gt.txt")->required();
  eval->add_option("--pred", ev_pred, "Directory of <name>.pred.txt")->required();
  eval->add_option("--confusions", ev_top, "Number of confusions to list")->capture_default_str();
  eval->add_option("--worst", ev_worst, "Number of worst lines to list")->capture_default_str();
  eval->add_option("--rules", ev_rules, "Text normalization rules applied to both sides");
  eval->add_option("--json", ev_json, "Also write a JSON report here");

  std::string dg_text, dg_out, dg_font = "a";
  GenOptions dg_opts;
  dg_opts.count = 100;
  double dg_noise = 0.0;
  long long dg_text_seed = -1;
  auto* datagen = app.add_subcommand("datagen", "Render synthetic line images from a text file");
  datagen->add_option("--text", dg_text, "UTF-8 text source")->required();
  datagen->add_option("--out", dg_out, "Output directory")->required();
  datagen->add_option("--seed", dg_opts.seed, "Noise seed")->capture_default_str();
  datagen->add_option("--text-seed", dg_text_seed, "Line sampling seed (default: --seed)");
  datagen->add_option("--count", dg_opts.count, "Number of lines")->capture_default_str();
  datagen->add_option("--noise", dg_noise, "Degradation level, 0 to 2")->capture_default_str();
  datagen->add_option("--font", dg_font, "Font: a (regular) or b (bold slanted, adds umlauts)")
      ->capture_default_str();
  datagen->add_option("--umlaut-rate", dg_opts.umlaut_rate, "Chance to turn each a/o into an umlaut")
      ->capture_default_str();
  datagen->add_option("--min-chars", dg_opts.min_chars, "Minimum characters per line")->capture_default_str();
  datagen->add_option("--max-chars", dg_opts.max_chars, "Maximum characters per line")->capture_default_str();

  std::string bench_model, bench_data;
  std::size_t bench_repeats = 1;
  auto* bench = app.add_subcommand("bench", "Time prediction and training steps per line");
  bench->add_option("--model", bench_model, "Model file")->required();
  bench->add_option("--data", bench_data, "Directory of line images with ground truth")->required();
  bench->add_option("--repeats", bench_repeats, "Passes over the data")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return run_train(train_args);
    if (*ft) return run_finetune(ft_args, ft_base, ft_whitelist, ft_keep_all);
    if (*folds) return run_folds(fold_args, fold_k, fold_dir);
    if (*predict) return run_predict(pred_models, pred_data, pred_out, pred_ext, pred_jobs);
    if (*eval) return run_eval(ev_gt, ev_pred, ev_top, ev_worst, ev_rules, ev_json);
    if (*datagen) return run_datagen(dg_text, dg_out, dg_opts, dg_noise, dg_font, dg_text_seed);
    if (*bench) return run_bench(bench_model, bench_data, bench_repeats);
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SpecParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace lineocr

// SPDX-License-Identifier: Apache-2.0
#include "lineocr/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "lineocr/eval.hpp"
#include "lineocr/parallel.hpp"
#include "lineocr/predict.hpp"

namespace lineocr {

namespace {

namespace fs = std::filesystem;

constexpr std::string_view kGtSuffix = ".gt.txt";

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LineSample load_sample(const fs::path& image, const fs::path& gt, const TextNormRules& rules) {
  LineSample s;
  s.name = image.stem().string();
  s.image = preprocess_image(read_pgm(image));
  try {
    s.text = preprocess_text(read_text(gt), rules);
  } catch (const DataError& e) {
    throw DataError(gt.string() + ": " + e.what());
  }
  if (s.text.empty()) throw DataError("empty ground truth for " + s.name);
  return s;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.sources = ds.sources;
  for (std::size_t i : indices) out.samples.push_back(ds.samples[i]);
  return out;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  shuffle(idx, rng);
  return idx;
}

Tensor<float> log_softmax(const Tensor<float>& logits) {
  Tensor<float> out(logits.shape());
  for (std::size_t t = 0; t < logits.dim(0); ++t) {
    const auto z = logits.row(t);
    const float mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (float v : z) sum += std::exp(static_cast<double>(v - mx));
    const float lse = mx + static_cast<float>(std::log(sum));
    auto o = out.row(t);
    for (std::size_t k = 0; k < z.size(); ++k) o[k] = z[k] - lse;
  }
  return out;
}

void add_into(std::vector<GradMap<float>>& dst, const std::vector<GradMap<float>>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) {
    for (auto& [role, g] : dst[i]) {
      const Tensor<float>& s = src[i].at(role);
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += s[k];
    }
  }
}

}  // namespace

std::vector<std::string> Dataset::texts() const {
  std::vector<std::string> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.text);
  return out;
}

Dataset load_dataset(const fs::path& dir, const TextNormRules& rules) {
  if (!fs::is_directory(dir)) throw DataError("dataset directory " + dir.string() + " does not exist");
  std::map<std::string, fs::path> images, gts;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string file = entry.path().filename().string();
    if (entry.path().extension() == ".pgm") {
      images.emplace(entry.path().stem().string(), entry.path());
    } else if (file.size() > kGtSuffix.size() && file.ends_with(kGtSuffix)) {
      gts.emplace(file.substr(0, file.size() - kGtSuffix.size()), entry.path());
    }
  }
  for (const auto& [name, path] : images) {
    if (!gts.count(name)) throw DataError("missing GT for " + name);
  }
  for (const auto& [name, path] : gts) {
    if (!images.count(name)) throw DataError("missing image for " + name);
  }
  Dataset ds;
  ds.sources.push_back(dir);
  for (const auto& [name, path] : images) ds.samples.push_back(load_sample(path, gts.at(name), rules));
  return ds;
}

Dataset load_dataset(const std::vector<fs::path>& images, const TextNormRules& rules) {
  std::vector<fs::path> sorted = images;
  std::sort(sorted.begin(), sorted.end(), [](const fs::path& a, const fs::path& b) { return a.stem() < b.stem(); });
  Dataset ds;
  for (const auto& image : sorted) {
    fs::path gt = image.parent_path() / (image.stem().string() + std::string(kGtSuffix));
    if (!fs::exists(gt)) throw DataError("missing GT for " + image.stem().string());
    ds.samples.push_back(load_sample(image, gt, rules));
    ds.sources.push_back(image);
  }
  return ds;
}

Split split_train_val(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ParamError("validation fraction must lie in (0,1)");
  if (ds.size() < 2) throw DataError("need at least 2 samples to split into train and validation");
  const auto idx = shuffled_indices(ds.size(), seed);
  auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, ds.size() - 1);
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {subset(ds, train), subset(ds, val)};
}

std::vector<Split> make_folds(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ParamError("cross-fold training needs k >= 2");
  if (ds.size() < k) {
    throw DataError("cannot make " + std::to_string(k) + " folds from " + std::to_string(ds.size()) + " samples");
  }
  const auto idx = shuffled_indices(ds.size(), seed);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < idx.size(); ++i) folds[i % k].push_back(idx[i]);
  std::vector<Split> out;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    }
    std::vector<std::size_t> val = folds[f];
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    out.push_back({subset(ds, train), subset(ds, val)});
  }
  return out;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ParamError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ParamError("learning rate must be positive");
  if (checkpoint_interval < 1) throw ParamError("checkpoint interval must be >= 1");
  if (patience < 1) throw ParamError("patience must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ParamError("validation fraction must lie in (0,1)");
  }
  if (!(clip_norm > 0.0)) throw ParamError("clip norm must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ParamError("dropout must lie in [0,1)");
}

double evaluate_cer(const Model& model, const Dataset& ds, std::size_t jobs) {
  std::vector<LinePair> pairs(ds.size());
  parallel_for(ds.size(), jobs, [&](std::size_t i) {
    pairs[i] = {ds.samples[i].text, predict_line(model, ds.samples[i].image).text, ds.samples[i].name};
  });
  return corpus_cer(pairs);
}

double train_step(Model& model, AdamState<float>& adam, const std::vector<const LineSample*>& batch,
                  const std::vector<LabelSeq>& targets, const TrainConfig& cfg, std::uint64_t step_seed) {
  Network<float>& net = model.network;
  const float inv_batch = 1.0f / static_cast<float>(batch.size());
  std::vector<std::vector<GradMap<float>>> line_grads(batch.size());
  std::vector<double> losses(batch.size());

  // Per-line gradient buffers summed in batch order keep results independent of `jobs`.
  parallel_for(batch.size(), cfg.jobs, [&](std::size_t i) {
    Rng rng(derive_seed(step_seed, i));
    Tape<float> tape;
    const auto out = net.forward(batch[i]->image.as_tensor(), {true, cfg.dropout, &rng}, &tape);
    auto ctc = ctc_loss_from_log_probs(log_softmax(out.logits), targets[i]);
    for (auto& g : ctc.grad.data()) g *= inv_batch;
    line_grads[i] = net.make_grad_maps();
    net.backward(ctc.grad, tape, line_grads[i]);
    losses[i] = ctc.loss;
  });

  std::vector<GradMap<float>> total = net.make_grad_maps();
  for (const auto& g : line_grads) add_into(total, g);
  for (std::size_t p = 0; p < net.params().size(); ++p) net.params()[p].grads = std::move(total[p]);

  clip_global_norm(net.params(), cfg.clip_norm);
  adam_step(net.params(), adam);

  double mean = 0.0;
  for (double l : losses) mean += l;
  return mean / static_cast<double>(batch.size());
}

TrainResult train_loop(const Dataset& train, const Dataset& val, const TrainConfig& cfg,
                       const std::optional<Model>& init, const ValidationFn& validator) {
  cfg.validate();
  if (train.empty()) throw DataError("training set is empty");
  if (val.empty() && !validator) throw DataError("validation set is empty");
  const auto start = std::chrono::steady_clock::now();

  Model model = init ? *init
                     : Model::create(parse_spec(cfg.spec, cfg.conv_filters), build_codec(train.texts()), cfg.seed);
  model.hyper["learning_rate"] = cfg.learning_rate;
  model.hyper["dropout"] = cfg.dropout;
  model.hyper["batch_size"] = static_cast<double>(cfg.batch_size);
  model.hyper["clip_norm"] = cfg.clip_norm;
  model.network.zero_grad();

  TrainResult result{model, {}};
  TrainReport& report = result.report;

  std::vector<const LineSample*> usable;
  std::vector<LabelSeq> targets;
  for (const auto& s : train.samples) {
    LabelSeq labels = encode(s.text, model.codec);
    const WidthCheck check = min_width_check(model.spec, labels, s.image.width);
    if (!check.feasible) {
      ++report.skipped_lines;
      std::cerr << "warning: skipping " << s.name << ": " << check.timesteps << " timesteps for "
                << check.required_timesteps << " required\n";
      continue;
    }
    usable.push_back(&s);
    targets.push_back(std::move(labels));
  }
  if (usable.empty()) throw InfeasibleError("every training line is too narrow for its ground truth");

  AdamState<float> adam;
  adam.learning_rate = cfg.learning_rate;
  auto validate_now = [&](const Model& m) { return validator ? validator(m) : evaluate_cer(m, val, cfg.jobs); };

  Rng order_rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  std::size_t stale_checks = 0;
  bool have_best = false;
  const std::size_t cap = cfg.iteration_cap();

  auto check = [&](std::size_t iteration) {
    const double c = validate_now(model);
    report.history.push_back(c);
    report.check_iterations.push_back(iteration);
    if (!have_best || c < report.best_cer) {
      have_best = true;
      report.best_cer = c;
      report.best_check = report.history.size() - 1;
      result.model = model;
      stale_checks = 0;
    } else {
      ++stale_checks;
    }
    if (cfg.verbose) {
      std::cerr << "check " << report.history.size() << " at iteration " << iteration << ": CER " << c
                << (stale_checks == 0 ? " (best)" : "") << "\n";
    }
    if (cfg.target_cer && c <= *cfg.target_cer) report.reached_target = true;
    return report.reached_target || stale_checks >= cfg.patience;
  };

  std::vector<const LineSample*> batch;
  std::vector<LabelSeq> batch_targets;
  for (std::size_t it = 1; it <= cap; ++it) {
    batch.clear();
    batch_targets.clear();
    while (batch.size() < cfg.batch_size) {
      if (cursor == order.size()) {
        order.resize(usable.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle(order, order_rng);
        cursor = 0;
      }
      batch.push_back(usable[order[cursor]]);
      batch_targets.push_back(targets[order[cursor]]);
      ++cursor;
    }
    const double loss = train_step(model, adam, batch, batch_targets, cfg, derive_seed(cfg.seed, 1000 + it));
    if (!std::isfinite(loss)) throw InfeasibleError("training diverged: non-finite CTC loss");
    report.iterations = it;
    if (cfg.verbose && it % cfg.checkpoint_interval == 0) std::cerr << "iteration " << it << ": loss " << loss << "\n";
    if (it % cfg.checkpoint_interval == 0 || it == cap) {
      if (check(it)) break;
    }
  }

  result.model.network.zero_grad();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Model adapt_model(const Model& base, const CodecResize& resize, std::uint64_t seed) {
  Model adapted = Model::create(base.spec, resize.codec, seed);
  adapted.hyper = base.hyper;
  auto& params = adapted.network.params();
  const auto& base_params = base.network.params();
  for (std::size_t p = 0; p + 1 < params.size(); ++p) params[p].weights = base_params[p].weights;

  const Tensor<float>& base_w = base.network.output_layer().weight("W");
  const Tensor<float>& base_b = base.network.output_layer().weight("bias");
  Tensor<float>& w = adapted.network.output_layer().weight("W");
  Tensor<float>& b = adapted.network.output_layer().weight("bias");
  if (w.dim(0) != base_w.dim(0)) throw ShapeError("output layer input size changed during surgery");
  const std::size_t rows = w.dim(0), new_cols = w.dim(1), old_cols = base_w.dim(1);
  for (const auto& [old_index, new_index] : resize.delta.kept) {
    const auto o = static_cast<std::size_t>(old_index), n = static_cast<std::size_t>(new_index);
    for (std::size_t r = 0; r < rows; ++r) w[r * new_cols + n] = base_w[r * old_cols + o];
    b[n] = base_b[o];
  }
  adapted.network.zero_grad();
  return adapted;
}

TrainResult finetune(const Model& base, const Dataset& train, const Dataset& val, std::u32string_view whitelist,
                     bool keep_all, const TrainConfig& cfg) {
  if (train.empty()) throw DataError("finetuning set is empty");
  const CodecResize resize = resize_codec(base.codec, train.texts(), whitelist, keep_all);
  if (cfg.verbose) {
    std::cerr << "codec resize: " << resize.delta.kept.size() - 1 << " kept, " << resize.delta.added.size()
              << " added, " << resize.delta.removed.size() << " removed\n";
  }
  return train_loop(train, val, cfg, adapt_model(base, resize, cfg.seed));
}

TrainResult finetune(const Model& base, const Dataset& train, std::u32string_view whitelist, bool keep_all,
                     const TrainConfig& cfg) {
  if (train.empty()) throw DataError("finetuning set is empty");
  // The codec covers the whole finetuning set, held-out lines included.
  const CodecResize resize = resize_codec(base.codec, train.texts(), whitelist, keep_all);
  Split split = split_train_val(train, cfg.validation_fraction, cfg.seed);
  return train_loop(split.train, split.val, cfg, adapt_model(base, resize, cfg.seed));
}

}  // namespace lineocr

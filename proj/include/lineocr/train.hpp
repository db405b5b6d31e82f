// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lineocr/model.hpp"
#include "lineocr/optim.hpp"

namespace lineocr {

/// Preprocessed line image with its normalized ground truth.
struct LineSample {
  std::string name;
  LineImage image;
  std::string text;
};

/// Fully in-memory set of line samples.
struct Dataset {
  std::vector<LineSample> samples;
  std::vector<std::filesystem::path> sources;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  std::vector<std::string> texts() const;
};

/// Loads every `<name>.pgm` / `<name>.gt.txt` pair in `dir`, sorted by name.
/// Orphans on either side, unreadable files and empty ground truth are DataErrors.
Dataset load_dataset(const std::filesystem::path& dir, const TextNormRules& rules = {});
/// Loads the given images; each needs a `<name>.gt.txt` next to it.
Dataset load_dataset(const std::vector<std::filesystem::path>& images, const TextNormRules& rules = {});

struct Split {
  Dataset train;
  Dataset val;
};

/// Seeded shuffle, then |val| = round(fraction * n) clamped to [1, n-1].
Split split_train_val(const Dataset& ds, double fraction, std::uint64_t seed);

/// k train/validation pairs; the validation folds partition the dataset.
std::vector<Split> make_folds(const Dataset& ds, std::size_t k, std::uint64_t seed);

struct TrainConfig {
  std::string spec = "C,Mp(2x2),C,Mp(2x2),LSTM(200)";
  std::vector<int> conv_filters;  // empty: 64, 128, ...
  std::size_t batch_size = 5;
  double learning_rate = 0.001;
  std::size_t checkpoint_interval = 100;
  std::size_t patience = 10;
  double validation_fraction = 0.2;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;
  double dropout = 0.5;
  std::size_t max_iterations = 0;     // 0: 100 * checkpoint_interval
  std::optional<double> target_cer;   // stop at the first check at or below it
  std::size_t jobs = 1;               // lines processed concurrently per batch
  bool verbose = false;

  std::size_t iteration_cap() const { return max_iterations ? max_iterations : 100 * checkpoint_interval; }
  void validate() const;
};

struct TrainReport {
  std::size_t iterations = 0;
  std::vector<double> history;               // validation CER per check
  std::vector<std::size_t> check_iterations; // iteration of each check
  std::size_t best_check = 0;                // index into history
  double best_cer = 1.0;
  std::size_t skipped_lines = 0;             // infeasible for the network's width
  bool reached_target = false;
  double wall_seconds = 0.0;
  std::string model_path;
};

struct TrainResult {
  Model model;
  TrainReport report;
};

/// Replaces the CER evaluation at each check (used to inject validation sequences).
using ValidationFn = std::function<double(const Model&)>;

/// Corpus CER of greedy predictions on `ds`.
double evaluate_cer(const Model& model, const Dataset& ds, std::size_t jobs = 1);

/// Mini-batch training with early stopping on validation CER. Returns the
/// best-validation snapshot, never the last weights.
TrainResult train_loop(const Dataset& train, const Dataset& val, const TrainConfig& cfg,
                       const std::optional<Model>& init = std::nullopt, const ValidationFn& validator = {});

/// Output-layer surgery: new model over `resize.codec` whose non-output weights
/// are copied from `base`, kept characters keep their output weights, added
/// characters are freshly initialized and removed ones are dropped.
Model adapt_model(const Model& base, const CodecResize& resize, std::uint64_t seed);

/// Codec resize + surgery, then train_loop from the adapted model.
TrainResult finetune(const Model& base, const Dataset& train, const Dataset& val, std::u32string_view whitelist,
                     bool keep_all, const TrainConfig& cfg);
/// Same, holding out cfg.validation_fraction of `train` for early stopping.
TrainResult finetune(const Model& base, const Dataset& train, std::u32string_view whitelist, bool keep_all,
                     const TrainConfig& cfg);

/// One training iteration on the given samples (forward, CTC, backward, clip,
/// Adam). Returns the mean CTC loss. Exposed for benchmarking.
double train_step(Model& model, AdamState<float>& adam, const std::vector<const LineSample*>& batch,
                  const std::vector<LabelSeq>& targets, const TrainConfig& cfg, std::uint64_t step_seed);

}  // namespace lineocr

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lineocr/preprocess.hpp"

namespace lineocr {

/// Binary ink mask, row-major, 1 = ink.
struct Glyph {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> mask;

  std::uint8_t at(std::size_t y, std::size_t x) const { return mask[y * width + x]; }
};

/// Fixed-pitch bitmap font.
class GlyphFont {
 public:
  /// Upright regular face: 5x18 glyphs (5x9 designs, rows doubled), advance 6.
  static GlyphFont standard();
  /// Bold, slanted face with the same repertoire plus ä, ö, ü.
  static GlyphFont alternate();

  bool has(char32_t c) const { return glyphs_.count(c) != 0; }
  /// Throws DataError naming the character when it has no glyph.
  const Glyph& glyph(char32_t c) const;
  std::u32string repertoire() const;

  std::size_t glyph_height() const noexcept { return height_; }
  std::size_t advance() const noexcept { return advance_; }

 private:
  std::map<char32_t, Glyph> glyphs_;
  std::size_t height_ = 0;
  std::size_t advance_ = 0;
};

struct NoiseParams {
  double flip_probability = 0.0;  // per pixel, <= 0.1
  double gaussian_sigma = 0.0;    // intensity units, <= 0.2
  int jitter_px = 0;              // per-glyph horizontal offset in [-j, j]
  double scale_jitter = 0.0;      // line width scaled by a factor in [1-s, 1+s]

  /// Default degradation profile scaled by `level` (0 = clean, 1 = moderate, 2 = max).
  static NoiseParams scaled(double level);
  void validate() const;
};

inline constexpr std::size_t kGenMarginX = 4;
inline constexpr std::size_t kGenMarginY = 3;

struct RenderedLine {
  GrayImage image;
  std::string text;  // ground truth, preprocess_text-normalized
};

/// Composites glyphs left to right on a white line with margins, then applies noise.
/// Identical (text, font, noise, seed) give identical bytes.
RenderedLine render_line(std::string_view text, const GlyphFont& font, const NoiseParams& noise, std::uint64_t seed);

struct GenOptions {
  std::size_t count = 0;
  NoiseParams noise;
  std::uint64_t seed = 1;                  // noise realizations
  std::optional<std::uint64_t> text_seed;  // line sampling; defaults to seed
  std::size_t min_chars = 8;
  std::size_t max_chars = 24;
  std::string prefix = "line";
  double umlaut_rate = 0.0;  // chance of turning each a/o into ä/ö (alternate font)
};

/// Samples `count` lines of consecutive words from `source` and renders each
/// as `<prefix>_NNNN.pgm` + `.gt.txt`. Returns the written ground truths in order.
std::vector<std::string> gen_dataset(std::string_view source, const GlyphFont& font, const GenOptions& options,
                                     const std::filesystem::path& out_dir);

/// The line texts gen_dataset would render (no I/O).
std::vector<std::string> sample_lines(std::string_view source, const GenOptions& options);

}  // namespace lineocr

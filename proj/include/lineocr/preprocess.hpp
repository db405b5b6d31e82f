// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lineocr/tensor.hpp"

namespace lineocr {

inline constexpr std::size_t kLineHeight = 48;
inline constexpr std::size_t kLinePadding = 16;

/// 8-bit grayscale raster, row-major, 0 = black, 255 = white.
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Binary PGM (P5, maxval 255).
GrayImage read_pgm(const std::filesystem::path& path);
GrayImage decode_pgm(std::string_view bytes);
std::string encode_pgm(const GrayImage& image);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Normalized line: height 48, ink = 1, background = 0, 16 blank columns on
/// each side. `scale` and `source_width` map columns back to the raw image.
struct LineImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;
  double scale = 1.0;            // output pixels per raw pixel
  std::size_t source_width = 0;  // raw image width

  float at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  /// [height, width, 1] network input.
  template <typename T = float>
  Tensor<T> as_tensor() const {
    return Tensor<T>({height, width, 1}, std::vector<T>(pixels.begin(), pixels.end()));
  }
};

/// Bilinear proportional rescale to height 48, inversion to ink-positive [0,1],
/// 16 background columns per side. Output width = round(w * 48 / h) + 32.
LineImage preprocess_image(const GrayImage& raw);

struct TextNormRules {
  std::vector<std::pair<std::string, std::string>> replacements;  // applied in order
  bool normalize_unicode = true;                                   // NFC
  bool collapse_whitespace = true;

  /// UTF-8 file, one "pattern<TAB>replacement" per line; blank lines and lines
  /// starting with '#' are skipped.
  static TextNormRules load(const std::filesystem::path& path);
};

std::string preprocess_text(std::string_view raw, const TextNormRules& rules = {});

/// NFC composition of a UTF-8 string.
std::string nfc_normalize(std::string_view text);

}  // namespace lineocr

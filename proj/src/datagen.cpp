// SPDX-License-Identifier: Apache-2.0
#include "lineocr/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "lineocr/error.hpp"
#include "lineocr/rng.hpp"
#include "lineocr/utf8.hpp"

namespace lineocr {
namespace {

using Design = std::array<const char*, 9>;

struct DesignEntry {
  char32_t ch;
  Design rows;
};

const DesignEntry kDesigns[] = {
#include "font_glyphs.inc"
};

// Extra characters of the alternate face. Rows 0-1 of a, o, u are empty in the
// base designs, so the dots sit above the bowl.
const DesignEntry kUmlautDesigns[] = {
    {U'ä', {".#.#.", ".....", ".###.", "....#", ".####", "#...#", ".####", ".....", "....."}},
    {U'ö', {".#.#.", ".....", ".###.", "#...#", "#...#", "#...#", ".###.", ".....", "....."}},
    {U'ü', {".#.#.", ".....", "#...#", "#...#", "#...#", "#..##", ".##.#", ".....", "....."}},
};

constexpr std::size_t kDesignWidth = 5;
constexpr std::size_t kDesignHeight = 9;

// Each design row becomes two image rows.
Glyph upright(const Design& rows) {
  Glyph g;
  g.height = kDesignHeight * 2;
  g.width = kDesignWidth;
  g.mask.assign(g.height * g.width, 0);
  for (std::size_t r = 0; r < kDesignHeight; ++r) {
    for (std::size_t x = 0; x < kDesignWidth; ++x) {
      const std::uint8_t ink = rows[r][x] == '#' ? 1 : 0;
      g.mask[(2 * r) * g.width + x] = ink;
      g.mask[(2 * r + 1) * g.width + x] = ink;
    }
  }
  return g;
}

// Horizontal stroke doubling followed by a right-leaning shear of up to 2 px.
Glyph bold_slanted(const Glyph& base) {
  constexpr std::size_t kMaxShift = 2;
  Glyph g;
  g.height = base.height;
  g.width = base.width + 1 + kMaxShift;
  g.mask.assign(g.height * g.width, 0);
  for (std::size_t y = 0; y < base.height; ++y) {
    const std::size_t shift = (base.height - 1 - y) * (kMaxShift + 1) / base.height;
    for (std::size_t x = 0; x < base.width; ++x) {
      if (!base.at(y, x)) continue;
      g.mask[y * g.width + x + shift] = 1;
      g.mask[y * g.width + x + shift + 1] = 1;
    }
  }
  return g;
}

}  // namespace

GlyphFont GlyphFont::standard() {
  GlyphFont font;
  for (const auto& d : kDesigns) font.glyphs_.emplace(d.ch, upright(d.rows));
  font.height_ = kDesignHeight * 2;
  font.advance_ = kDesignWidth + 1;
  return font;
}

GlyphFont GlyphFont::alternate() {
  GlyphFont font;
  for (const auto& d : kDesigns) font.glyphs_.emplace(d.ch, bold_slanted(upright(d.rows)));
  for (const auto& d : kUmlautDesigns) font.glyphs_.emplace(d.ch, bold_slanted(upright(d.rows)));
  font.height_ = kDesignHeight * 2;
  font.advance_ = font.glyphs_.begin()->second.width + 1;
  return font;
}

const Glyph& GlyphFont::glyph(char32_t c) const {
  auto it = glyphs_.find(c);
  if (it == glyphs_.end()) {
    throw DataError("no glyph for character '" + utf8::encode(c) + "' (U+" + [&] {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04X", static_cast<unsigned>(c));
      return std::string(buf);
    }() + ")");
  }
  return it->second;
}

std::u32string GlyphFont::repertoire() const {
  std::u32string out;
  for (const auto& [c, g] : glyphs_) out.push_back(c);
  return out;
}

NoiseParams NoiseParams::scaled(double level) {
  if (!(level >= 0.0) || !std::isfinite(level)) throw ParamError("noise level must be a finite value >= 0");
  NoiseParams p;
  p.flip_probability = 0.05 * level;
  p.gaussian_sigma = 0.1 * level;
  p.jitter_px = static_cast<int>(std::lround(level));
  p.scale_jitter = 0.05 * level;
  p.validate();
  return p;
}

void NoiseParams::validate() const {
  if (!(flip_probability >= 0.0 && flip_probability <= 0.1))
    throw ParamError("flip probability must be in [0, 0.1]");
  if (!(gaussian_sigma >= 0.0 && gaussian_sigma <= 0.2)) throw ParamError("gaussian sigma must be in [0, 0.2]");
  if (jitter_px < 0 || jitter_px > 3) throw ParamError("jitter must be in [0, 3] px");
  if (!(scale_jitter >= 0.0 && scale_jitter <= 0.2)) throw ParamError("scale jitter must be in [0, 0.2]");
}

RenderedLine render_line(std::string_view text, const GlyphFont& font, const NoiseParams& noise, std::uint64_t seed) {
  noise.validate();
  RenderedLine out;
  out.text = preprocess_text(text);
  const std::u32string chars = utf8::decode(out.text);
  if (chars.empty()) throw DataError("cannot render an empty line");
  for (char32_t c : chars) font.glyph(c);

  Rng rng(derive_seed(seed, 0));
  const std::size_t jitter = static_cast<std::size_t>(noise.jitter_px);
  const std::size_t last_width = font.glyph(chars.back()).width;
  const std::size_t height = font.glyph_height() + 2 * kGenMarginY;
  const std::size_t width = 2 * kGenMarginX + 2 * jitter + (chars.size() - 1) * font.advance() + last_width;

  std::vector<double> ink(height * width, 0.0);
  for (std::size_t i = 0; i < chars.size(); ++i) {
    const Glyph& g = font.glyph(chars[i]);
    std::size_t x0 = kGenMarginX + jitter + i * font.advance();
    if (jitter > 0) x0 = x0 - jitter + uniform_index(rng, 2 * jitter + 1);
    for (std::size_t y = 0; y < g.height; ++y)
      for (std::size_t x = 0; x < g.width; ++x)
        if (g.at(y, x)) ink[(y + kGenMarginY) * width + x0 + x] = 1.0;
  }

  std::size_t out_width = width;
  if (noise.scale_jitter > 0.0) {
    const double factor = uniform(rng, 1.0 - noise.scale_jitter, 1.0 + noise.scale_jitter);
    out_width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(width) * factor)));
    std::vector<double> scaled(height * out_width);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < out_width; ++x) {
        const std::size_t sx = std::min(width - 1, static_cast<std::size_t>(static_cast<double>(x) * width / out_width));
        scaled[y * out_width + x] = ink[y * width + sx];
      }
    ink = std::move(scaled);
  }

  out.image.height = height;
  out.image.width = out_width;
  out.image.pixels.resize(height * out_width);
  for (std::size_t i = 0; i < ink.size(); ++i) {
    double v = ink[i];
    if (noise.gaussian_sigma > 0.0) v += noise.gaussian_sigma * normal(rng);
    if (noise.flip_probability > 0.0 && uniform01(rng) < noise.flip_probability) v = 1.0 - v;
    v = std::clamp(v, 0.0, 1.0);
    out.image.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - v)));
  }
  return out;
}

std::vector<std::string> sample_lines(std::string_view source, const GenOptions& options) {
  if (options.count == 0) throw ParamError("line count must be positive");
  if (options.min_chars == 0 || options.min_chars > options.max_chars)
    throw ParamError("need 0 < min_chars <= max_chars");
  std::vector<std::u32string> words;
  {
    const std::u32string text = utf8::decode(preprocess_text(source));
    std::u32string cur;
    for (char32_t c : text) {
      if (c == U' ') {
        if (!cur.empty()) words.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
  }
  if (words.empty()) throw DataError("text source is empty");

  Rng rng(derive_seed(options.text_seed.value_or(options.seed), 1));
  std::vector<std::string> lines;
  lines.reserve(options.count);
  for (std::size_t n = 0; n < options.count; ++n) {
    std::size_t w = uniform_index(rng, words.size());
    std::u32string line = words[w].substr(0, options.max_chars);
    for (std::size_t added = 1; added < words.size(); ++added) {
      const std::u32string& next = words[(w + added) % words.size()];
      if (line.size() + 1 + next.size() > options.max_chars) {
        if (line.size() >= options.min_chars) break;
        continue;
      }
      line.push_back(U' ');
      line += next;
    }
    lines.push_back(utf8::encode(line));
  }
  return lines;
}

std::vector<std::string> gen_dataset(std::string_view source, const GlyphFont& font, const GenOptions& options,
                                     const std::filesystem::path& out_dir) {
  options.noise.validate();
  std::vector<std::string> lines = sample_lines(source, options);
  if (options.umlaut_rate > 0.0) {
    Rng rng(derive_seed(options.text_seed.value_or(options.seed), 2));
    for (auto& line : lines) {
      std::u32string u = utf8::decode(line);
      for (char32_t& c : u) {
        if (c == U'a' && uniform01(rng) < options.umlaut_rate) c = U'ä';
        else if (c == U'o' && uniform01(rng) < options.umlaut_rate) c = U'ö';
      }
      line = utf8::encode(u);
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create directory " + out_dir.string() + ": " + ec.message());

  std::vector<std::string> truths;
  truths.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const RenderedLine r = render_line(lines[i], font, options.noise, derive_seed(options.seed, 100 + i));
    char stem[64];
    std::snprintf(stem, sizeof stem, "%s_%04zu", options.prefix.c_str(), i);
    write_pgm(out_dir / (std::string(stem) + ".pgm"), r.image);
    const auto gt_path = out_dir / (std::string(stem) + ".gt.txt");
    std::ofstream gt(gt_path, std::ios::binary);
    gt << r.text << '\n';
    if (!gt) throw DataError("cannot write " + gt_path.string());
    truths.push_back(r.text);
  }
  return truths;
}

}  // namespace lineocr

// SPDX-License-Identifier: Apache-2.0
#include "lineocr/preprocess.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "lineocr/error.hpp"
#include "lineocr/utf8.hpp"

namespace lineocr {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' || c == 0x00A0 ||
         c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F ||
         c == 0x3000;
}

void replace_all(std::string& text, const std::string& pattern, const std::string& replacement) {
  if (pattern.empty()) return;
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto hit = text.find(pattern, pos);
    if (hit == std::string::npos) break;
    out.append(text, pos, hit - pos);
    out += replacement;
    pos = hit + pattern.size();
  }
  out.append(text, pos, std::string::npos);
  text = std::move(out);
}

}  // namespace

GrayImage decode_pgm(std::string_view bytes) {
  std::size_t pos = 0;
  auto skip_ws_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&]() -> std::size_t {
    skip_ws_and_comments();
    std::size_t value = 0, digits = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      value = value * 10 + static_cast<std::size_t>(bytes[pos++] - '0');
      if (++digits > 9) throw DataError("PGM header value too large");
    }
    if (digits == 0) throw DataError("malformed PGM header");
    return value;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw DataError("not a binary PGM (P5) image");
  pos = 2;
  GrayImage img;
  img.width = read_uint();
  img.height = read_uint();
  const std::size_t maxval = read_uint();
  if (maxval != 255) throw DataError("only 8-bit PGM (maxval 255) is supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw DataError("malformed PGM header");
  }
  ++pos;
  if (img.width == 0 || img.height == 0) throw DataError("PGM image has zero area");
  const std::size_t n = img.width * img.height;
  if (bytes.size() - pos < n) throw DataError("PGM pixel data truncated");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  try {
    return decode_pgm(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string encode_pgm(const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(image.pixels.begin(), image.pixels.end());
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream f(path, std::ios::binary);
  const std::string bytes = encode_pgm(image);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("cannot write " + path.string());
}

LineImage preprocess_image(const GrayImage& raw) {
  if (raw.height == 0 || raw.width == 0 || raw.pixels.size() != raw.height * raw.width) {
    throw DataError("cannot preprocess a zero-area image");
  }
  const double scale = static_cast<double>(kLineHeight) / static_cast<double>(raw.height);
  const auto content = static_cast<std::size_t>(
      std::max(1.0, std::round(static_cast<double>(raw.width) * scale)));

  LineImage line;
  line.height = kLineHeight;
  line.width = content + 2 * kLinePadding;
  line.pixels.assign(line.height * line.width, 0.0f);
  line.scale = scale;
  line.source_width = raw.width;

  // Pixel-center mapping; sample positions are clamped to the source edges.
  const double sx = static_cast<double>(raw.width) / static_cast<double>(content);
  const double sy = static_cast<double>(raw.height) / static_cast<double>(kLineHeight);
  auto ink = [&](std::size_t y, std::size_t x) { return 1.0 - raw.pixels[y * raw.width + x] / 255.0; };
  for (std::size_t y = 0; y < kLineHeight; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(raw.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, raw.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < content; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(raw.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, raw.width - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = ink(y0, x0) * (1.0 - wx) + ink(y0, x1) * wx;
      const double bottom = ink(y1, x0) * (1.0 - wx) + ink(y1, x1) * wx;
      line.pixels[y * line.width + kLinePadding + x] = static_cast<float>(top * (1.0 - wy) + bottom * wy);
    }
  }
  return line;
}

TextNormRules TextNormRules::load(const std::filesystem::path& path) {
  TextNormRules rules;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected pattern<TAB>replacement");
    }
    rules.replacements.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return rules;
}

std::string nfc_normalize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  const icu::UnicodeString src = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const icu::UnicodeString dst = nfc->normalize(src, status);
  if (U_FAILURE(status)) throw DataError("unicode normalization failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

std::string preprocess_text(std::string_view raw, const TextNormRules& rules) {
  utf8::decode(raw);  // validates
  std::string text = rules.normalize_unicode ? nfc_normalize(raw) : std::string(raw);
  for (const auto& [pattern, replacement] : rules.replacements) replace_all(text, pattern, replacement);
  if (!rules.collapse_whitespace) return text;

  const std::u32string chars = utf8::decode(text);
  std::u32string out;
  out.reserve(chars.size());
  bool pending_space = false;
  for (char32_t c : chars) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return utf8::encode(out);
}

}  // namespace lineocr

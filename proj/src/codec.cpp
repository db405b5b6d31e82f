// SPDX-License-Identifier: Apache-2.0
#include "lineocr/codec.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "lineocr/error.hpp"
#include "lineocr/utf8.hpp"

namespace lineocr {

namespace {

std::string describe(char32_t c) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(c));
  return "'" + utf8::encode(c) + "' (" + buf + ")";
}

Codec codec_from_set(const std::set<char32_t>& chars) { return Codec(std::u32string(chars.begin(), chars.end())); }

}  // namespace

Codec::Codec(std::u32string chars) : chars_(std::move(chars)) {
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    if (!index_.emplace(chars_[i], static_cast<int>(i + 1)).second) {
      throw ParamError("duplicate codec character " + describe(chars_[i]));
    }
  }
}

int Codec::index_of(char32_t c) const {
  auto it = index_.find(c);
  return it == index_.end() ? -1 : it->second;
}

char32_t Codec::char_at(int label) const {
  if (label < 1 || static_cast<std::size_t>(label) > chars_.size()) {
    throw DataError("label " + std::to_string(label) + " outside codec of size " + std::to_string(size()));
  }
  return chars_[static_cast<std::size_t>(label - 1)];
}

Codec build_codec(const std::vector<std::string>& texts) {
  std::set<char32_t> chars;
  for (const auto& t : texts) {
    for (char32_t c : utf8::decode(t)) chars.insert(c);
  }
  if (chars.empty()) throw DataError("cannot build a codec from an empty corpus");
  return codec_from_set(chars);
}

LabelSeq encode(std::string_view text, const Codec& codec) {
  const std::u32string chars = utf8::decode(text);
  LabelSeq labels;
  labels.reserve(chars.size());
  for (std::size_t i = 0; i < chars.size(); ++i) {
    const int label = codec.index_of(chars[i]);
    if (label < 0) throw DataError("character " + describe(chars[i]) + " at offset " + std::to_string(i) + " is not in the codec");
    labels.push_back(label);
  }
  return labels;
}

std::string decode(std::span<const int> labels, const Codec& codec) {
  std::u32string out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(codec.char_at(l));
  return utf8::encode(out);
}

CodecResize resize_codec(const Codec& base, const std::vector<std::string>& new_texts, std::u32string_view whitelist,
                         bool keep_all) {
  std::set<char32_t> chars;
  for (const auto& t : new_texts) {
    for (char32_t c : utf8::decode(t)) chars.insert(c);
  }
  for (char32_t c : whitelist) {
    if (base.contains(c)) chars.insert(c);
  }
  if (keep_all) chars.insert(base.chars().begin(), base.chars().end());

  CodecResize out{codec_from_set(chars), {}};
  out.delta.kept.emplace_back(kBlank, kBlank);
  for (char32_t c : out.codec.chars()) {
    const int old_index = base.index_of(c);
    if (old_index > 0) {
      out.delta.kept.emplace_back(old_index, out.codec.index_of(c));
    } else {
      out.delta.added.push_back(c);
    }
  }
  for (char32_t c : base.chars()) {
    if (!out.codec.contains(c)) out.delta.removed.push_back(c);
  }
  return out;
}

}  // namespace lineocr

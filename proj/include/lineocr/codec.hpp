// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lineocr/ctc.hpp"

namespace lineocr {

/// Ordered alphabet. Index 0 is the CTC blank, character i sits at index i+1.
class Codec {
 public:
  Codec() = default;
  /// Characters must be distinct; they are kept in the given order.
  explicit Codec(std::u32string chars);

  /// Number of network outputs, blank included.
  std::size_t size() const noexcept { return chars_.size() + 1; }
  const std::u32string& chars() const noexcept { return chars_; }

  bool contains(char32_t c) const { return index_.count(c) != 0; }
  /// Label index of `c`, or -1.
  int index_of(char32_t c) const;
  char32_t char_at(int label) const;

  friend bool operator==(const Codec& a, const Codec& b) { return a.chars_ == b.chars_; }

 private:
  std::u32string chars_;
  std::unordered_map<char32_t, int> index_;
};

/// Distinct characters of all texts in unicode scalar order.
Codec build_codec(const std::vector<std::string>& texts);

/// Throws DataError naming the first unknown character and its offset.
LabelSeq encode(std::string_view text, const Codec& codec);
std::string decode(std::span<const int> labels, const Codec& codec);

struct CodecDelta {
  std::vector<std::pair<int, int>> kept;  // (old index, new index); blank (0,0) first
  std::u32string added;
  std::u32string removed;
};

struct CodecResize {
  Codec codec;
  CodecDelta delta;
};

/// New alphabet = chars(new_texts) + (whitelist ∩ base) + (base, if keep_all).
CodecResize resize_codec(const Codec& base, const std::vector<std::string>& new_texts, std::u32string_view whitelist,
                         bool keep_all);

}  // namespace lineocr

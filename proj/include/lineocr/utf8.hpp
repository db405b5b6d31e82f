// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace lineocr::utf8 {

/// Decodes UTF-8 into unicode scalar values. Throws DataError on malformed input.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view text);
std::string encode(char32_t c);

}  // namespace lineocr::utf8

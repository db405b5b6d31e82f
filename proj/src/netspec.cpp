// SPDX-License-Identifier: Apache-2.0
#include "lineocr/netspec.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "lineocr/ctc.hpp"
#include "lineocr/error.hpp"

namespace lineocr {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

class TokenParser {
 public:
  TokenParser(std::string_view token, std::size_t position) : token_(token), position_(position) {}

  [[noreturn]] void fail(const std::string& reason) const { throw SpecParseError(std::string(token_), position_, reason); }

  // Splits "Name(args)" into name and args; `has_args` false when no parentheses.
  void split(std::string& name, std::string_view& args, bool& has_args) const {
    const auto open = token_.find('(');
    if (open == std::string_view::npos) {
      if (token_.find(')') != std::string_view::npos) fail("unbalanced parenthesis");
      name = lower(trim(token_));
      has_args = false;
      return;
    }
    if (token_.back() != ')' || token_.find('(', open + 1) != std::string_view::npos ||
        token_.find(')') != token_.size() - 1) {
      fail("malformed parentheses");
    }
    name = lower(trim(token_.substr(0, open)));
    args = trim(token_.substr(open + 1, token_.size() - open - 2));
    has_args = true;
  }

  int integer(std::string_view text) const {
    text = trim(text);
    int value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end) fail("expected an integer, got '" + std::string(text) + "'");
    if (value < 1) fail("argument must be positive");
    return value;
  }

 private:
  std::string_view token_;
  std::size_t position_;
};

}  // namespace

std::size_t NetworkSpec::horizontal_downsampling() const {
  std::size_t factor = 1;
  for (const auto& l : layers) {
    if (l.kind == LayerKind::MaxPool) factor *= static_cast<std::size_t>(l.kw);
  }
  return factor;
}

std::size_t NetworkSpec::vertical_downsampling() const {
  std::size_t factor = 1;
  for (const auto& l : layers) {
    if (l.kind == LayerKind::MaxPool) factor *= static_cast<std::size_t>(l.kh);
  }
  return factor;
}

int default_conv_filters(std::size_t index) { return 64 << std::min<std::size_t>(index, 20); }

NetworkSpec parse_spec(std::string_view text, std::span<const int> conv_filters) {
  NetworkSpec spec;
  spec.source = std::string(text);
  std::size_t conv_index = 0;
  bool seen_lstm = false;
  std::size_t position = 0;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const auto raw = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    ++position;
    TokenParser tp(raw, position);
    if (raw.empty()) tp.fail("empty token");

    std::string name;
    std::string_view args;
    bool has_args = false;
    tp.split(name, args, has_args);

    if (name == "c") {
      if (seen_lstm) tp.fail("convolution after an LSTM layer");
      int filters = 0;
      if (has_args) {
        filters = tp.integer(args);
      } else if (conv_filters.empty()) {
        filters = default_conv_filters(conv_index);
      } else if (conv_index < conv_filters.size()) {
        filters = conv_filters[conv_index];
      } else {
        filters = conv_filters.back() << std::min<std::size_t>(conv_index - conv_filters.size() + 1, 20);
      }
      if (filters < 1) tp.fail("filter count must be positive");
      spec.layers.push_back(LayerSpec::conv(filters));
      ++conv_index;
    } else if (name == "mp") {
      if (seen_lstm) tp.fail("pooling after an LSTM layer");
      if (!has_args) tp.fail("pooling needs a kernel, e.g. Mp(2x2)");
      const std::string a = lower(args);
      const auto x = a.find('x');
      if (x == std::string::npos) tp.fail("pooling kernel must be WxH");
      // Width first: Mp(1x2) halves only the height.
      const int kw = tp.integer(std::string_view(a).substr(0, x));
      const int kh = tp.integer(std::string_view(a).substr(x + 1));
      if (kh < 1 || kw < 1 || kh > 2 || kw > 2) tp.fail("pooling kernel extents must be 1 or 2");
      spec.layers.push_back(LayerSpec::pool(kh, kw));
    } else if (name == "lstm") {
      if (!has_args) tp.fail("LSTM needs a hidden size, e.g. LSTM(200)");
      spec.layers.push_back(LayerSpec::lstm(tp.integer(args)));
      seen_lstm = true;
    } else {
      tp.fail("unknown layer");
    }

    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return spec;
}

std::string render_spec(const NetworkSpec& spec) {
  if (spec.layers.empty()) throw ParamError("cannot render an empty network spec");
  std::string out;
  std::size_t conv_index = 0;
  for (const auto& l : spec.layers) {
    if (!out.empty()) out += ",";
    switch (l.kind) {
      case LayerKind::Conv:
        out += l.filters == default_conv_filters(conv_index) ? std::string("C") : "C(" + std::to_string(l.filters) + ")";
        ++conv_index;
        break;
      case LayerKind::MaxPool:
        out += "Mp(" + std::to_string(l.kw) + "x" + std::to_string(l.kh) + ")";
        break;
      case LayerKind::Lstm:
        out += "LSTM(" + std::to_string(l.hidden) + ")";
        break;
    }
  }
  return out;
}

WidthCheck min_width_check(const NetworkSpec& spec, std::span<const int> labels, std::size_t image_width) {
  WidthCheck check;
  check.timesteps = image_width / spec.horizontal_downsampling();
  check.required_timesteps = ctc_required_length(labels);
  check.heuristic_timesteps = 2 * labels.size();
  check.feasible = check.timesteps >= check.required_timesteps;
  return check;
}

std::size_t heuristic_min_width(const NetworkSpec& spec, std::size_t label_count) {
  return 2 * label_count * spec.horizontal_downsampling();
}

}  // namespace lineocr

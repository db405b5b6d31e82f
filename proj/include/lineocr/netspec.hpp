// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lineocr {

enum class LayerKind { Conv, MaxPool, Lstm };

struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int filters = 0;  // Conv
  int kh = 0;       // MaxPool
  int kw = 0;       // MaxPool
  int hidden = 0;   // Lstm

  static LayerSpec conv(int filters) { return {LayerKind::Conv, filters, 0, 0, 0}; }
  static LayerSpec pool(int kh, int kw) { return {LayerKind::MaxPool, 0, kh, kw, 0}; }
  static LayerSpec lstm(int hidden) { return {LayerKind::Lstm, 0, 0, 0, hidden}; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Ordered layer list: all Conv/MaxPool layers precede all LSTM layers.
struct NetworkSpec {
  std::vector<LayerSpec> layers;
  std::string source;

  /// Product of kw over all pooling layers (time-axis reduction).
  std::size_t horizontal_downsampling() const;
  std::size_t vertical_downsampling() const;

  /// Structural equality; `source` is ignored.
  friend bool operator==(const NetworkSpec& a, const NetworkSpec& b) { return a.layers == b.layers; }
};

/// Filter count of the i-th conv token when none is given: 64, 128, 256, ...
int default_conv_filters(std::size_t index);

/// Parses e.g. "C,Mp(2x2),C,Mp(2x2),LSTM(200)". The i-th bare `C` takes
/// `conv_filters[i]` (doubling past the end of a non-empty list, or the default
/// 64/128/... sequence when empty). `C(n)` states the count explicitly.
/// Throws SpecParseError naming the offending token and its 1-based position.
NetworkSpec parse_spec(std::string_view text, std::span<const int> conv_filters = {});

/// Canonical form. Conv counts matching the default sequence are written as a
/// bare `C`, others as `C(n)`, so parse_spec(render_spec(s)) == s.
std::string render_spec(const NetworkSpec& spec);

struct WidthCheck {
  bool feasible = false;
  std::size_t timesteps = 0;            // network output length for the image width
  std::size_t required_timesteps = 0;   // exact CTC bound
  std::size_t heuristic_timesteps = 0;  // two predictions per label
};

WidthCheck min_width_check(const NetworkSpec& spec, std::span<const int> labels, std::size_t image_width);

/// Smallest image width satisfying the two-predictions-per-label rule.
std::size_t heuristic_min_width(const NetworkSpec& spec, std::size_t label_count);

}  // namespace lineocr

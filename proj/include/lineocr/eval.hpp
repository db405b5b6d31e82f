// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lineocr {

enum class EditOp { Match, Substitute, Delete, Insert };

struct AlignStep {
  EditOp op;
  char32_t gt;    // 0 for Insert
  char32_t pred;  // 0 for Delete
};

struct EditResult {
  std::size_t distance = 0;
  std::vector<AlignStep> alignment;  // in reading order
};

/// Unit-cost Levenshtein distance with one optimal alignment. The backtrace
/// prefers substitution (or match), then deletion, then insertion.
EditResult edit_distance(std::u32string_view gt, std::u32string_view pred);
/// UTF-8 convenience overload.
EditResult edit_distance_utf8(std::string_view gt, std::string_view pred);

/// ed(gt, pred) / max(|gt|, |pred|) over unicode scalar values; 0 when both are empty.
double cer(std::string_view gt, std::string_view pred);

struct LinePair {
  std::string gt;
  std::string pred;
  std::string name;
};

/// Σ ed / Σ max-length. Throws ParamError on an empty corpus.
double corpus_cer(const std::vector<LinePair>& pairs);

struct Confusion {
  std::string gt;    // empty for insertions
  std::string pred;  // empty for deletions
  std::size_t count = 0;
  double percent = 0.0;  // of all errors
};

struct ConfusionStats {
  std::vector<Confusion> top;
  std::size_t remaining_count = 0;
  double remaining_percent = 0.0;
  std::size_t total_errors = 0;
};

ConfusionStats confusion_stats(const std::vector<LinePair>& pairs, std::size_t top_n);

struct WorstLine {
  std::size_t index = 0;
  std::string name;
  std::string gt;
  std::string pred;
  std::size_t errors = 0;
  double cer = 0.0;
};

/// Lines by absolute edit distance, descending; ties keep input order.
std::vector<WorstLine> worst_lines(const std::vector<LinePair>& pairs, std::size_t n);

struct EvalReport {
  std::size_t lines = 0;
  std::size_t total_chars = 0;  // ground-truth characters
  std::size_t total_errors = 0;
  double corpus_cer = 0.0;
  double mean_line_cer = 0.0;
  std::vector<double> line_cer;
  ConfusionStats confusions;
  std::vector<WorstLine> worst;
};

EvalReport evaluate(const std::vector<LinePair>& pairs, std::size_t top_n, std::size_t worst_n);

/// Plain-text report: summary, then a GT | PRED | COUNT | PERCENT confusion table.
std::string format_report(const EvalReport& report);
std::string report_json(const EvalReport& report);

}  // namespace lineocr

// SPDX-License-Identifier: Apache-2.0
#include "lineocr/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <map>

#include "lineocr/error.hpp"
#include "lineocr/utf8.hpp"

namespace lineocr {

EditResult edit_distance(std::u32string_view gt, std::u32string_view pred) {
  const std::size_t n = gt.size(), m = pred.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = at(i - 1, j - 1) + (gt[i - 1] == pred[j - 1] ? 0 : 1);
      at(i, j) = std::min({sub, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  EditResult result;
  result.distance = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (gt[i - 1] == pred[j - 1] ? 0 : 1)) {
      const bool same = gt[i - 1] == pred[j - 1];
      result.alignment.push_back({same ? EditOp::Match : EditOp::Substitute, gt[i - 1], pred[j - 1]});
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      result.alignment.push_back({EditOp::Delete, gt[i - 1], 0});
      --i;
    } else {
      result.alignment.push_back({EditOp::Insert, 0, pred[j - 1]});
      --j;
    }
  }
  std::reverse(result.alignment.begin(), result.alignment.end());
  return result;
}

EditResult edit_distance_utf8(std::string_view gt, std::string_view pred) {
  return edit_distance(utf8::decode(gt), utf8::decode(pred));
}

double cer(std::string_view gt, std::string_view pred) {
  const auto a = utf8::decode(gt), b = utf8::decode(pred);
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(edit_distance(a, b).distance) / static_cast<double>(longest);
}

double corpus_cer(const std::vector<LinePair>& pairs) {
  if (pairs.empty()) throw ParamError("corpus CER of an empty corpus");
  std::size_t errors = 0, mass = 0;
  for (const auto& p : pairs) {
    const auto a = utf8::decode(p.gt), b = utf8::decode(p.pred);
    errors += edit_distance(a, b).distance;
    mass += std::max(a.size(), b.size());
  }
  return mass == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(mass);
}

ConfusionStats confusion_stats(const std::vector<LinePair>& pairs, std::size_t top_n) {
  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  ConfusionStats stats;
  for (const auto& p : pairs) {
    for (const auto& step : edit_distance_utf8(p.gt, p.pred).alignment) {
      if (step.op == EditOp::Match) continue;
      const std::string g = step.op == EditOp::Insert ? std::string() : utf8::encode(step.gt);
      const std::string q = step.op == EditOp::Delete ? std::string() : utf8::encode(step.pred);
      ++counts[{g, q}];
      ++stats.total_errors;
    }
  }
  std::vector<Confusion> all;
  for (const auto& [key, count] : counts) all.push_back({key.first, key.second, count, 0.0});
  std::stable_sort(all.begin(), all.end(), [](const Confusion& a, const Confusion& b) { return a.count > b.count; });
  const double total = static_cast<double>(stats.total_errors);
  for (std::size_t k = 0; k < all.size(); ++k) {
    all[k].percent = 100.0 * static_cast<double>(all[k].count) / total;
    if (k < top_n) {
      stats.top.push_back(all[k]);
    } else {
      stats.remaining_count += all[k].count;
    }
  }
  stats.remaining_percent = stats.total_errors ? 100.0 * static_cast<double>(stats.remaining_count) / total : 0.0;
  return stats;
}

std::vector<WorstLine> worst_lines(const std::vector<LinePair>& pairs, std::size_t n) {
  std::vector<WorstLine> lines;
  lines.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto ed = edit_distance_utf8(pairs[i].gt, pairs[i].pred).distance;
    lines.push_back({i, pairs[i].name, pairs[i].gt, pairs[i].pred, ed, cer(pairs[i].gt, pairs[i].pred)});
  }
  std::stable_sort(lines.begin(), lines.end(), [](const WorstLine& a, const WorstLine& b) { return a.errors > b.errors; });
  if (lines.size() > n) lines.resize(n);
  return lines;
}

EvalReport evaluate(const std::vector<LinePair>& pairs, std::size_t top_n, std::size_t worst_n) {
  if (pairs.empty()) throw ParamError("cannot evaluate an empty corpus");
  EvalReport report;
  report.lines = pairs.size();
  std::size_t mass = 0;
  for (const auto& p : pairs) {
    const auto a = utf8::decode(p.gt), b = utf8::decode(p.pred);
    const std::size_t ed = edit_distance(a, b).distance;
    const std::size_t longest = std::max(a.size(), b.size());
    report.total_chars += a.size();
    report.total_errors += ed;
    mass += longest;
    report.line_cer.push_back(longest ? static_cast<double>(ed) / static_cast<double>(longest) : 0.0);
  }
  report.corpus_cer = mass ? static_cast<double>(report.total_errors) / static_cast<double>(mass) : 0.0;
  double sum = 0.0;
  for (double c : report.line_cer) sum += c;
  report.mean_line_cer = sum / static_cast<double>(report.line_cer.size());
  report.confusions = confusion_stats(pairs, top_n);
  report.worst = worst_lines(pairs, worst_n);
  return report;
}

namespace {

std::string show(const std::string& s) { return s.empty() ? "{}" : "'" + s + "'"; }

}  // namespace

std::string format_report(const EvalReport& r) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "lines: %zu\nground-truth chars: %zu\nerrors: %zu\n", r.lines, r.total_chars,
                r.total_errors);
  out += buf;
  std::snprintf(buf, sizeof buf, "corpus CER: %.4f%%\nmean line CER: %.4f%%\n", 100.0 * r.corpus_cer,
                100.0 * r.mean_line_cer);
  out += buf;
  if (!r.confusions.top.empty() || r.confusions.remaining_count) {
    out += "\nGT\tPRED\tCOUNT\tPERCENT\n";
    for (const auto& c : r.confusions.top) {
      std::snprintf(buf, sizeof buf, "\t%zu\t%.2f%%\n", c.count, c.percent);
      out += show(c.gt) + "\t" + show(c.pred) + buf;
    }
    std::snprintf(buf, sizeof buf, "remaining\t\t%zu\t%.2f%%\n", r.confusions.remaining_count,
                  r.confusions.remaining_percent);
    out += buf;
  }
  if (!r.worst.empty()) {
    out += "\nworst lines\n";
    for (const auto& w : r.worst) {
      std::snprintf(buf, sizeof buf, "%zu errors (%.2f%%)\t", w.errors, 100.0 * w.cer);
      out += buf + (w.name.empty() ? "#" + std::to_string(w.index) : w.name) + "\n  gt:   " + w.gt + "\n  pred: " +
             w.pred + "\n";
    }
  }
  return out;
}

std::string report_json(const EvalReport& r) {
  nlohmann::json j;
  j["lines"] = r.lines;
  j["total_chars"] = r.total_chars;
  j["total_errors"] = r.total_errors;
  j["corpus_cer"] = r.corpus_cer;
  j["mean_line_cer"] = r.mean_line_cer;
  j["line_cer"] = r.line_cer;
  auto& conf = j["confusions"];
  conf = nlohmann::json::array();
  for (const auto& c : r.confusions.top) {
    conf.push_back({{"gt", c.gt}, {"pred", c.pred}, {"count", c.count}, {"percent", c.percent}});
  }
  j["remaining"] = {{"count", r.confusions.remaining_count}, {"percent", r.confusions.remaining_percent}};
  auto& worst = j["worst"];
  worst = nlohmann::json::array();
  for (const auto& w : r.worst) {
    worst.push_back({{"index", w.index}, {"name", w.name}, {"gt", w.gt}, {"pred", w.pred}, {"errors", w.errors}});
  }
  return j.dump(2);
}

}  // namespace lineocr

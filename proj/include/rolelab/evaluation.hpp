#pragma once

#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "rolelab/corpus.hpp"

namespace rolelab {

struct LabelMetrics {
  long tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  long support = 0;
};

// Zero-denominator convention: precision/recall with an empty denominator are
// 0, and F1 of (0,0) is 0.
inline LabelMetrics metrics_from_counts(long tp, long fp, long fn) {
  LabelMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.support = tp + fn;
  m.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = (m.precision + m.recall) == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

template <typename T>
inline std::tuple<double, double, double> per_label_f1(const std::vector<T>& gold, const std::vector<T>& pred,
                                                       const T& label) {
  if (gold.size() != pred.size()) throw Error("per_label_f1: gold/pred length mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    bool g = gold[i] == label;
    bool p = pred[i] == label;
    if (g && p) ++tp;
    if (!g && p) ++fp;
    if (g && !p) ++fn;
  }
  LabelMetrics m = metrics_from_counts(tp, fp, fn);
  return {m.precision, m.recall, m.f1};
}

// Per-label TP/FP/FN counts over a fixed label set.
struct ConfusionCounts {
  std::vector<std::string> labels;
  std::vector<LabelMetrics> per_label;

  long total_tp() const {
    long n = 0;
    for (const auto& m : per_label) n += m.tp;
    return n;
  }
};

inline double micro_f1(const ConfusionCounts& counts) {
  if (counts.per_label.empty()) throw Error("micro_f1: empty label set");
  long tp = 0, fp = 0, fn = 0;
  for (const auto& m : counts.per_label) {
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
  }
  return metrics_from_counts(tp, fp, fn).f1;
}

// Unweighted mean of per-label F1, zero-support labels included at 0.
inline double macro_f1(const std::vector<double>& per_label_f1s) {
  if (per_label_f1s.empty()) throw Error("macro_f1: empty label set");
  double sum = 0.0;
  for (double f : per_label_f1s) sum += f;
  return sum / static_cast<double>(per_label_f1s.size());
}

struct MetricsReport {
  std::string experiment_id;
  std::vector<std::string> labels;
  std::vector<LabelMetrics> per_label;
  double micro = 0.0;
  double macro = 0.0;
  std::map<std::string, std::string> config_echo;

  const LabelMetrics& metrics_for(const std::string& label) const {
    for (size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return per_label[i];
    throw Error("MetricsReport: no label '" + label + "'");
  }
};

inline MetricsReport report_from_counts(std::string experiment_id, ConfusionCounts counts) {
  MetricsReport report;
  report.experiment_id = std::move(experiment_id);
  report.labels = counts.labels;
  report.per_label = counts.per_label;
  report.micro = micro_f1(counts);
  std::vector<double> f1s;
  f1s.reserve(counts.per_label.size());
  for (const auto& m : counts.per_label) f1s.push_back(m.f1);
  report.macro = macro_f1(f1s);
  return report;
}

// Multiclass tagging counts over integer-coded sequences; for a complete
// single-label tag set the pooled micro-F1 equals plain accuracy.
inline ConfusionCounts tagging_confusion(const std::vector<std::vector<int>>& gold,
                                         const std::vector<std::vector<int>>& pred,
                                         const std::vector<std::string>& labels) {
  if (gold.size() != pred.size()) throw Error("tagging_confusion: instance count mismatch");
  int n = static_cast<int>(labels.size());
  std::vector<long> tp(static_cast<size_t>(n), 0), fp(static_cast<size_t>(n), 0), fn(static_cast<size_t>(n), 0);
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != pred[i].size()) throw Error("tagging_confusion: sequence length mismatch");
    for (size_t t = 0; t < gold[i].size(); ++t) {
      int g = gold[i][t];
      int p = pred[i][t];
      if (g < 0 || g >= n || p < 0 || p >= n) throw Error("tagging_confusion: label id out of range");
      if (g == p) ++tp[static_cast<size_t>(g)];
      else {
        ++fn[static_cast<size_t>(g)];
        ++fp[static_cast<size_t>(p)];
      }
    }
  }
  ConfusionCounts counts;
  counts.labels = labels;
  for (int l = 0; l < n; ++l)
    counts.per_label.push_back(metrics_from_counts(tp[static_cast<size_t>(l)], fp[static_cast<size_t>(l)],
                                                   fn[static_cast<size_t>(l)]));
  return counts;
}

// Binary positive-class counts per proto-role property: micro pools the
// positive-class TP/FP/FN across all 18 properties.
inline ConfusionCounts property_confusion(const std::vector<std::vector<std::pair<int, int>>>& gold_pred_by_property) {
  if (gold_pred_by_property.size() != static_cast<size_t>(kNumProperties))
    throw Error("property_confusion: expected one bucket per property");
  ConfusionCounts counts;
  for (int p = 0; p < kNumProperties; ++p) {
    counts.labels.push_back(to_string(static_cast<Property>(p)));
    long tp = 0, fp = 0, fn = 0;
    for (const auto& [g, pr] : gold_pred_by_property[static_cast<size_t>(p)]) {
      if (g == 1 && pr == 1) ++tp;
      if (g == 0 && pr == 1) ++fp;
      if (g == 1 && pr == 0) ++fn;
    }
    counts.per_label.push_back(metrics_from_counts(tp, fp, fn));
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Table layouts and rendering
// ---------------------------------------------------------------------------

struct TableLayout {
  std::string name;
  std::vector<std::string> labels;
};

inline TableLayout srl_table_layout() {
  TableLayout layout;
  layout.name = "srl";
  for (int t = 0; t < kNumSRLTags; ++t) layout.labels.push_back(to_string(static_cast<SRLTag>(t)));
  return layout;
}

inline TableLayout span_table_layout() {
  TableLayout layout;
  layout.name = "span";
  for (int t = 0; t < kNumSpanTags; ++t) layout.labels.push_back(to_string(static_cast<SpanTag>(t)));
  return layout;
}

inline TableLayout head_table_layout() {
  TableLayout layout;
  layout.name = "head";
  for (int t = 0; t < kNumHeadTags; ++t) layout.labels.push_back(to_string(static_cast<HeadTag>(t)));
  return layout;
}

inline TableLayout sprl_table_layout() {
  TableLayout layout;
  layout.name = "sprl";
  for (int p = 0; p < kNumProperties; ++p) layout.labels.push_back(to_string(static_cast<Property>(p)));
  return layout;
}

namespace detail {

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::string full_precision(double v) {
  char buf[40];
  snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline void check_layout(const std::vector<MetricsReport>& reports, const TableLayout& layout) {
  if (reports.empty()) throw Error("render_report: no reports");
  for (const auto& r : reports) {
    if (r.labels != layout.labels)
      throw Error("render_report: report '" + r.experiment_id + "' does not match the '" + layout.name +
                  "' label set");
  }
}

}  // namespace detail

// CSV with full-precision values so that parsing reproduces the reports
// exactly; one column group (precision/recall/f1/support) per experiment,
// then micro-F1 / macro-F1 footer rows.
inline std::string render_report_csv(const std::vector<MetricsReport>& reports, const TableLayout& layout) {
  detail::check_layout(reports, layout);
  std::ostringstream out;
  out << "label";
  for (const auto& r : reports) {
    for (const char* col : {"precision", "recall", "f1", "support"})
      out << "," << detail::csv_quote(r.experiment_id + "|" + col);
  }
  out << "\n";
  for (size_t l = 0; l < layout.labels.size(); ++l) {
    out << detail::csv_quote(layout.labels[l]);
    for (const auto& r : reports) {
      const auto& m = r.per_label[l];
      out << "," << detail::full_precision(m.precision) << "," << detail::full_precision(m.recall) << ","
          << detail::full_precision(m.f1) << "," << m.support;
    }
    out << "\n";
  }
  out << "micro-F1";
  for (const auto& r : reports) out << ",,," << detail::full_precision(r.micro) << ",";
  out << "\n";
  out << "macro-F1";
  for (const auto& r : reports) out << ",,," << detail::full_precision(r.macro) << ",";
  out << "\n";
  return out.str();
}

// Inverse of render_report_csv (metric values only; config echo is not
// carried through CSV).
inline std::vector<MetricsReport> parse_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("parse_report_csv: empty input");
  auto header = detail::csv_split(line);
  if (header.empty() || header[0] != "label") throw ParseError("parse_report_csv: bad header");
  if ((header.size() - 1) % 4 != 0) throw ParseError("parse_report_csv: unexpected column count");
  size_t n_reports = (header.size() - 1) / 4;
  std::vector<MetricsReport> reports(n_reports);
  for (size_t r = 0; r < n_reports; ++r) {
    std::string name = header[1 + 4 * r];
    size_t bar = name.rfind('|');
    reports[r].experiment_id = bar == std::string::npos ? name : name.substr(0, bar);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = detail::csv_split(line);
    if (fields[0] == "micro-F1" || fields[0] == "macro-F1") {
      for (size_t r = 0; r < n_reports; ++r) {
        double v = std::stod(fields[1 + 4 * r + 2]);
        if (fields[0] == "micro-F1") reports[r].micro = v;
        else reports[r].macro = v;
      }
      continue;
    }
    for (size_t r = 0; r < n_reports; ++r) {
      LabelMetrics m;
      m.precision = std::stod(fields[1 + 4 * r + 0]);
      m.recall = std::stod(fields[1 + 4 * r + 1]);
      m.f1 = std::stod(fields[1 + 4 * r + 2]);
      m.support = std::stol(fields[1 + 4 * r + 3]);
      reports[r].labels.push_back(fields[0]);
      reports[r].per_label.push_back(m);
    }
  }
  return reports;
}

// Aligned text table in the papers' style: F1 per experiment rendered to one
// decimal (percent scale), micro/macro footer rows; a single report also
// shows precision/recall/support. With mark_deltas, every column after the
// first carries its per-label delta against the first (baseline) column.
inline std::string render_report_text(const std::vector<MetricsReport>& reports, const TableLayout& layout,
                                      bool mark_deltas = false) {
  detail::check_layout(reports, layout);
  std::ostringstream out;
  auto pct = [](double v) {
    char buf[16];
    snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
    return std::string(buf);
  };
  size_t label_w = 8;
  for (const auto& l : layout.labels) label_w = std::max(label_w, l.size());

  if (reports.size() == 1) {
    const auto& r = reports[0];
    out << std::left << std::setw(static_cast<int>(label_w)) << "label"
        << "  " << std::right << std::setw(9) << "precision" << std::setw(8) << "recall" << std::setw(8) << "F1"
        << std::setw(9) << "support" << "\n";
    for (size_t l = 0; l < layout.labels.size(); ++l) {
      const auto& m = r.per_label[l];
      out << std::left << std::setw(static_cast<int>(label_w)) << layout.labels[l] << "  " << std::right
          << std::setw(9) << pct(m.precision) << std::setw(8) << pct(m.recall) << std::setw(8) << pct(m.f1)
          << std::setw(9) << m.support << "\n";
    }
    out << std::left << std::setw(static_cast<int>(label_w)) << "micro-F1"
        << "  " << std::right << std::setw(25) << pct(r.micro) << "\n";
    out << std::left << std::setw(static_cast<int>(label_w)) << "macro-F1"
        << "  " << std::right << std::setw(25) << pct(r.macro) << "\n";
    return out.str();
  }

  auto delta_cell = [&](double value, double base) {
    char buf[32];
    snprintf(buf, sizeof(buf), "%.1f (%+.1f)", 100.0 * value, 100.0 * (value - base));
    return std::string(buf);
  };
  std::vector<size_t> widths;
  for (size_t r = 0; r < reports.size(); ++r) {
    size_t value_w = mark_deltas && r > 0 ? 14 : 6;
    widths.push_back(std::max(value_w, reports[r].experiment_id.size()));
  }
  out << std::left << std::setw(static_cast<int>(label_w)) << "label";
  for (size_t r = 0; r < reports.size(); ++r)
    out << "  " << std::right << std::setw(static_cast<int>(widths[r])) << reports[r].experiment_id;
  out << "\n";
  for (size_t l = 0; l < layout.labels.size(); ++l) {
    out << std::left << std::setw(static_cast<int>(label_w)) << layout.labels[l];
    for (size_t r = 0; r < reports.size(); ++r) {
      std::string cell = mark_deltas && r > 0
                             ? delta_cell(reports[r].per_label[l].f1, reports[0].per_label[l].f1)
                             : pct(reports[r].per_label[l].f1);
      out << "  " << std::right << std::setw(static_cast<int>(widths[r])) << cell;
    }
    out << "\n";
  }
  for (const char* agg : {"micro-F1", "macro-F1"}) {
    out << std::left << std::setw(static_cast<int>(label_w)) << agg;
    for (size_t r = 0; r < reports.size(); ++r) {
      double value = std::string(agg) == "micro-F1" ? reports[r].micro : reports[r].macro;
      double base = std::string(agg) == "micro-F1" ? reports[0].micro : reports[0].macro;
      std::string cell = mark_deltas && r > 0 ? delta_cell(value, base) : pct(value);
      out << "  " << std::right << std::setw(static_cast<int>(widths[r])) << cell;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace rolelab

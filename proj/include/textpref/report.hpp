#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "textpref/error.hpp"
#include "textpref/io.hpp"
#include "textpref/metrics.hpp"

namespace textpref {

/// A rendered-to-strings table. Row width must equal the column count;
/// the first column is the row key.
struct TableSpec {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  bool operator==(const TableSpec&) const = default;

  void validate() const {
    for (const auto& row : rows)
      if (row.size() != columns.size())
        throw ValidationError("table '" + title + "': row width " +
                              std::to_string(row.size()) +
                              " != column count " +
                              std::to_string(columns.size()));
  }
};

enum class TableFormat { Csv, Markdown };

inline TableFormat table_format_from_string(std::string_view s) {
  if (s == "csv") return TableFormat::Csv;
  if (s == "md" || s == "markdown") return TableFormat::Markdown;
  throw ValidationError("unknown table format: '" + std::string(s) +
                        "' (expected csv|md)");
}

inline std::string fmt_double(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v, int precision = 6) {
  return v ? fmt_double(*v, precision) : std::string();
}

/// Sample mean with the half-width of its 95% confidence interval
/// (t-distribution, n-1 degrees of freedom). The interval is undefined for
/// fewer than two values.
struct MeanCi {
  double mean = 0.0;
  std::optional<double> ci_half_width;
  std::size_t n = 0;
};

inline MeanCi mean_ci95(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean_ci95: no values");
  MeanCi out;
  out.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  const boost::math::students_t dist(static_cast<double>(values.size() - 1));
  const double t = boost::math::quantile(dist, 0.975);
  out.ci_half_width = t * sd / std::sqrt(static_cast<double>(values.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Rendering. Output is a pure function of the inputs; no timestamps unless
// the caller opts in.
// ---------------------------------------------------------------------------

inline std::string render_table(const TableSpec& table, TableFormat format) {
  table.validate();
  std::ostringstream out;
  if (format == TableFormat::Csv) {
    if (!table.title.empty()) out << "# " << table.title << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(table.columns[i]);
    }
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << csv_escape(row[i]);
      }
      out << '\n';
    }
  } else {
    if (!table.title.empty()) out << "### " << table.title << "\n\n";
    const auto cell = [](const std::string& s) {
      return s.empty() ? std::string("—") : s;
    };
    out << '|';
    for (const auto& c : table.columns) out << ' ' << c << " |";
    out << "\n|";
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& row : table.rows) {
      out << '|';
      for (const auto& c : row) out << ' ' << cell(c) << " |";
      out << '\n';
    }
  }
  return out.str();
}

/// Parse the tabular core back out of a CSV rendering (comments become the
/// title). Inverse of render_table for the Csv format.
inline TableSpec parse_table_csv(const std::string& text) {
  TableSpec table;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      table.title = line.size() > 2 ? line.substr(2) : "";
      continue;
    }
    auto fields = split_csv_line(line, line_no);
    if (!have_header) {
      table.columns = std::move(fields);
      have_header = true;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw ValidationError("parse_table_csv: no header row");
  table.validate();
  return table;
}

inline void emit(std::span<const TableSpec> tables, TableFormat format,
                 std::ostream& out, bool stamp = false,
                 std::string_view stamp_text = "") {
  if (tables.empty()) throw ValidationError("emit: no tables");
  if (stamp) {
    if (format == TableFormat::Csv) out << "# generated: " << stamp_text << '\n';
    else out << "<!-- generated: " << stamp_text << " -->\n";
  }
  bool first = true;
  for (const auto& t : tables) {
    if (!first) out << '\n';
    first = false;
    out << render_table(t, format);
  }
}

// ---------------------------------------------------------------------------
// Table builders for the shapes this toolkit reports.
// ---------------------------------------------------------------------------

inline TableSpec table_from_groups(std::string title,
                                   std::span<const GroupReport> groups,
                                   int precision = 6) {
  TableSpec t;
  t.title = std::move(title);
  t.columns = {"group", "n", "mcc", "kl", "f1_macro"};
  for (const auto& g : groups)
    t.rows.push_back({g.key, std::to_string(g.n), fmt_opt(g.mcc, precision),
                      fmt_opt(g.kl, precision), fmt_double(g.f1_macro, precision)});
  return t;
}

inline TableSpec table_from_improvements(std::string title,
                                         std::span<const Improvement> deltas,
                                         int precision = 1) {
  TableSpec t;
  t.title = std::move(title);
  t.columns = {"group", "improvement_pct"};
  for (const auto& d : deltas)
    t.rows.push_back({d.key, d.percent ? fmt_double(*d.percent, precision)
                                       : std::string("undefined")});
  return t;
}

/// Mean +/- 95% CI of each metric column across the group rows
/// (one summary row per metric).
inline TableSpec summary_table(std::string title,
                               std::span<const GroupReport> groups,
                               int precision = 6) {
  if (groups.empty()) throw ValidationError("summary_table: no groups");
  TableSpec t;
  t.title = std::move(title);
  t.columns = {"metric", "mean", "ci95_half_width", "n"};
  const auto add_row = [&](const char* name, const std::vector<double>& values) {
    if (values.empty()) return;
    const MeanCi s = mean_ci95(values);
    t.rows.push_back({name, fmt_double(s.mean, precision),
                      s.ci_half_width ? fmt_double(*s.ci_half_width, precision)
                                      : std::string(),
                      std::to_string(s.n)});
  };
  std::vector<double> mccs, kls, f1s;
  for (const auto& g : groups) {
    if (g.mcc) mccs.push_back(*g.mcc);
    if (g.kl) kls.push_back(*g.kl);
    f1s.push_back(g.f1_macro);
  }
  add_row("mcc", mccs);
  add_row("kl", kls);
  add_row("f1_macro", f1s);
  return t;
}

/// Top/bottom-k rows by a metric, ties broken by key (Table shape used for
/// best and worst performing languages).
inline TableSpec top_bottom_table(std::string title,
                                  std::span<const GroupReport> groups,
                                  MetricField field, std::size_t k,
                                  int precision = 2) {
  TableSpec t;
  t.title = std::move(title);
  t.columns = {"rank", "top_group", "top_value", "bottom_group", "bottom_value"};
  std::vector<const GroupReport*> sorted;
  for (const auto& g : groups)
    if (metric_value(g, field)) sorted.push_back(&g);
  std::sort(sorted.begin(), sorted.end(), [&](const auto* a, const auto* b) {
    const double va = *metric_value(*a, field), vb = *metric_value(*b, field);
    if (va != vb) return va > vb;
    return a->key < b->key;
  });
  const std::size_t rows = std::min(k, sorted.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const auto* top = sorted[i];
    const auto* bottom = sorted[sorted.size() - 1 - i];
    t.rows.push_back({std::to_string(i + 1), top->key,
                      fmt_double(*metric_value(*top, field), precision),
                      bottom->key,
                      fmt_double(*metric_value(*bottom, field), precision)});
  }
  return t;
}

}  // namespace textpref

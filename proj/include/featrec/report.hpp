#pragma once

// Report files.
//
//   report.csv     aggregates; columns dataset, classifier, imputer,
//                  fraction, mean_change_pp, std_change_pp, n. Preceded by
//                  the config snapshot as "# key=value" lines.
//   report.md      one table per dataset with imputers as rows, numbers
//                  as "mean ± std" with 2 decimals (half-even).
//   raw_cells.csv  one line per cell, enough to rebuild the aggregates.
//
// Reals in the CSV files are written in shortest round-trip form, and NaN as
// "nan", so parsing them back yields identical values.

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "featrec/harness.hpp"

namespace featrec {

enum class ReportFormat { csv, markdown };

namespace detail {

inline std::string csv_real(double v) { return std::isnan(v) ? "nan" : format_real(v); }

inline double parse_csv_real(const std::string& s, std::size_t line, std::size_t col) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  const auto v = parse_real(s);
  if (!v) throw ParseError("'" + s + "' is not a real", line, col);
  return *v;
}

inline std::size_t parse_csv_count(const std::string& s, std::size_t line, std::size_t col) {
  const auto v = parse_integer(s);
  if (!v || *v < 0) throw ParseError("'" + s + "' is not a count", line, col);
  return static_cast<std::size_t>(*v);
}

// Rounds the shortest decimal form of v to 2 places, ties to even. Working
// on the decimal digits means a value printed as 0.125 becomes 0.12 and one
// printed as 0.135 becomes 0.14.
inline std::string fixed2_half_even(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), std::fabs(v), std::chars_format::scientific);
  const std::string sci(buf, res.ptr);
  const auto e_pos = sci.find('e');
  std::string digits;
  for (std::size_t i = 0; i < e_pos; ++i)
    if (sci[i] != '.') digits.push_back(sci[i]);
  const int exponent = std::stoi(sci.substr(e_pos + 1));

  // Digits of |v| * 100 split into an integer part and the dropped tail.
  // The first digit sits at decimal position `exponent`.
  const int int_len = exponent + 3;  // digits at positions >= -2
  std::string whole, tail;
  if (int_len <= 0) {
    whole = "0";
    tail = std::string(static_cast<std::size_t>(-int_len), '0') + digits;
  } else if (static_cast<std::size_t>(int_len) >= digits.size()) {
    whole = digits + std::string(static_cast<std::size_t>(int_len) - digits.size(), '0');
  } else {
    whole = digits.substr(0, static_cast<std::size_t>(int_len));
    tail = digits.substr(static_cast<std::size_t>(int_len));
  }
  bool up = false;
  if (!tail.empty()) {
    const bool rest_nonzero = tail.find_first_not_of('0', 1) != std::string::npos;
    if (tail[0] > '5' || (tail[0] == '5' && rest_nonzero)) up = true;
    if (tail[0] == '5' && !rest_nonzero) up = (whole.back() - '0') % 2 == 1;
  }
  if (up) {
    int i = static_cast<int>(whole.size()) - 1;
    while (i >= 0 && whole[static_cast<std::size_t>(i)] == '9') whole[static_cast<std::size_t>(i--)] = '0';
    if (i < 0) whole.insert(whole.begin(), '1');
    else ++whole[static_cast<std::size_t>(i)];
  }
  while (whole.size() < 3) whole.insert(whole.begin(), '0');
  const bool zero = whole.find_first_not_of('0') == std::string::npos;
  std::string out = (v < 0 && !zero) ? "-" : "";
  out += whole.substr(0, whole.size() - 2) + "." + whole.substr(whole.size() - 2);
  return out;
}

inline std::string mask_text(const FeatureMask& m) {
  std::string s;
  for (auto j : m.missing) s += (s.empty() ? "" : ";") + std::to_string(j);
  return s;
}

inline FeatureMask parse_mask_text(const std::string& s, std::size_t line, std::size_t col) {
  FeatureMask m;
  std::size_t start = 0;
  while (start < s.size()) {
    const auto end = std::min(s.find(';', start), s.size());
    const auto v = parse_integer(std::string_view(s).substr(start, end - start));
    if (!v || *v < 0) throw ParseError("bad mask '" + s + "'", line, col);
    m.missing.push_back(static_cast<std::size_t>(*v));
    start = end + 1;
  }
  return m;
}

inline std::string csv_text(std::string s) {
  for (auto& ch : s)
    if (ch == ',' || ch == '"' || ch == '\n' || ch == '\r') ch = ' ';
  return s;
}

struct CsvLines {
  std::vector<std::pair<std::string, std::string>> snapshot;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line number, cells)
};

inline CsvLines read_csv_lines(std::string_view text, const std::vector<std::string>& header) {
  CsvLines out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim_cell(std::string_view(line).substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) out.snapshot.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    auto cells = split_csv_line(line);
    if (!have_header) {
      if (cells != header) throw ParseError("unexpected header", line_no, 1);
      have_header = true;
      continue;
    }
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()),
                       line_no, 1);
    }
    out.rows.emplace_back(line_no, std::move(cells));
  }
  if (!have_header) throw ParseError("missing header", line_no + 1, 1);
  return out;
}

inline ClassifierFamily parse_family_cell(const std::string& s, std::size_t line, std::size_t col) {
  const auto f = parse_classifier_family(s);
  if (!f) throw ParseError("unknown classifier '" + s + "'", line, col);
  return *f;
}

inline ImputerMethod parse_method_cell(const std::string& s, std::size_t line, std::size_t col) {
  const auto m = parse_imputer_method(s);
  if (!m) throw ParseError("unknown imputer '" + s + "'", line, col);
  return *m;
}

inline double parse_fraction_cell(const std::string& s, std::size_t line, std::size_t col) {
  const auto f = parse_fraction(s);
  if (!f) throw ParseError("bad fraction '" + s + "'", line, col);
  return *f;
}

}  // namespace detail

inline const std::vector<std::string>& report_csv_header() {
  static const std::vector<std::string> h{"dataset", "classifier", "imputer", "fraction",
                                          "mean_change_pp", "std_change_pp", "n"};
  return h;
}

inline const std::vector<std::string>& raw_cells_header() {
  static const std::vector<std::string> h{"dataset", "classifier", "imputer", "fraction", "mask_id", "mask",
                                          "accuracy_full", "accuracy_imputed", "change_pp", "status", "error"};
  return h;
}

inline std::string join_header(const std::vector<std::string>& h) {
  std::string s;
  for (const auto& x : h) s += (s.empty() ? "" : ",") + x;
  return s + "\n";
}

inline std::string emit_csv(const ExperimentReport& report) {
  std::string out = format_snapshot(report.config_snapshot, "# ");
  out += join_header(report_csv_header());
  for (const auto& [k, a] : report.aggregates) {
    out += k.dataset + "," + to_string(k.classifier) + "," + to_string(k.imputer) + "," + fraction_label(k.fraction) +
           "," + detail::csv_real(a.mean_change_pp) + "," + detail::csv_real(a.std_change_pp) + "," +
           std::to_string(a.n) + "\n";
  }
  return out;
}

inline std::string format_cell_stat(const Aggregate& a) {
  if (a.failed()) return "FAILED";
  if (a.n < 2) return detail::fixed2_half_even(a.mean_change_pp);
  return detail::fixed2_half_even(a.mean_change_pp) + " ± " + detail::fixed2_half_even(a.std_change_pp);
}

inline std::string emit_markdown(const ExperimentReport& report) {
  std::ostringstream md;
  md << "# Accuracy change after imputation (percentage points)\n\n";
  if (!report.config_snapshot.empty()) md << "```\n" << format_snapshot(report.config_snapshot) << "```\n\n";

  std::vector<std::string> datasets;
  std::vector<ClassifierFamily> families;
  std::vector<ImputerMethod> methods;
  std::vector<double> fractions;
  auto remember = [](auto& v, const auto& x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
  };
  for (const auto& [k, a] : report.aggregates) {
    remember(datasets, k.dataset);
    remember(families, k.classifier);
    remember(methods, k.imputer);
    remember(fractions, k.fraction);
  }
  std::sort(families.begin(), families.end());
  std::sort(methods.begin(), methods.end());
  std::sort(fractions.begin(), fractions.end());

  auto cell = [&](const std::string& d, ClassifierFamily c, ImputerMethod m, double f) -> std::string {
    const auto it = report.aggregates.find(GridKey{d, c, m, f});
    return it == report.aggregates.end() ? "" : format_cell_stat(it->second);
  };
  auto row = [&](const std::vector<std::string>& cells) {
    md << "|";
    for (const auto& c : cells) md << " " << c << " |";
    md << "\n";
  };

  for (const auto& d : datasets) {
    md << "## " << d << "\n\n";
    std::vector<std::string> acc_head{"classifier"}, acc_row{"full-data accuracy"};
    for (auto c : families) {
      const auto it = report.full_accuracy.find({d, c});
      acc_head.push_back(to_string(c));
      acc_row.push_back(it == report.full_accuracy.end() ? "FAILED" : detail::fixed2_half_even(it->second * 100.0) + "%");
    }
    row(acc_head);
    row(std::vector<std::string>(acc_head.size(), "---"));
    row(acc_row);
    md << "\n";

    // A single fraction gives methods x classifiers; several give one
    // methods x fractions table per classifier.
    if (fractions.size() == 1) {
      std::vector<std::string> head{"imputer"};
      for (auto c : families) head.push_back(to_string(c));
      md << "### missing: " << fraction_label(fractions.front()) << "\n\n";
      row(head);
      row(std::vector<std::string>(head.size(), "---"));
      for (auto m : methods) {
        std::vector<std::string> r{to_string(m)};
        for (auto c : families) r.push_back(cell(d, c, m, fractions.front()));
        row(r);
      }
      md << "\n";
    } else {
      for (auto c : families) {
        md << "### " << to_string(c) << "\n\n";
        std::vector<std::string> head{"imputer"};
        for (double f : fractions) head.push_back(fraction_label(f));
        row(head);
        row(std::vector<std::string>(head.size(), "---"));
        for (auto m : methods) {
          std::vector<std::string> r{to_string(m)};
          for (double f : fractions) r.push_back(cell(d, c, m, f));
          row(r);
        }
        md << "\n";
      }
    }
  }
  const std::size_t failed = report.n_failed();
  if (failed > 0) {
    md << "## Failed cells\n\n";
    std::map<std::string, std::size_t> reasons;
    for (const auto& c : report.cells)
      if (c.failed) ++reasons[c.dataset + ": " + c.error];
    for (const auto& [why, count] : reasons) md << "- " << count << " x " << why << "\n";
    md << "\n";
  }
  return md.str();
}

inline std::string emit_report(const ExperimentReport& report, ReportFormat format) {
  return format == ReportFormat::csv ? emit_csv(report) : emit_markdown(report);
}

inline std::string emit_raw_cells(const ExperimentReport& report) {
  std::string out = join_header(raw_cells_header());
  for (const auto& c : report.cells) {
    out += c.dataset + "," + to_string(c.classifier) + "," + to_string(c.imputer) + "," + fraction_label(c.fraction) +
           "," + std::to_string(c.mask_id) + "," + detail::mask_text(c.mask) + "," + detail::csv_real(c.accuracy_full) +
           "," + detail::csv_real(c.accuracy_imputed) + "," + detail::csv_real(c.change_pp) + "," +
           (c.failed ? "failed" : "ok") + "," + detail::csv_text(c.error) + "\n";
  }
  return out;
}

// Aggregates and snapshot from report.csv text.
inline ExperimentReport parse_report_csv(std::string_view text) {
  const auto lines = detail::read_csv_lines(text, report_csv_header());
  ExperimentReport r;
  r.config_snapshot = lines.snapshot;
  for (const auto& [ln, c] : lines.rows) {
    GridKey k{c[0], detail::parse_family_cell(c[1], ln, 2), detail::parse_method_cell(c[2], ln, 3),
              detail::parse_fraction_cell(c[3], ln, 4)};
    Aggregate a;
    a.mean_change_pp = detail::parse_csv_real(c[4], ln, 5);
    a.std_change_pp = detail::parse_csv_real(c[5], ln, 6);
    a.n = detail::parse_csv_count(c[6], ln, 7);
    if (!r.aggregates.emplace(k, a).second) throw ParseError("duplicate grid point", ln, 1);
  }
  return r;
}

// Full report rebuilt from raw_cells.csv text.
inline ExperimentReport parse_raw_cells(std::string_view text) {
  const auto lines = detail::read_csv_lines(text, raw_cells_header());
  ExperimentReport r;
  r.config_snapshot = lines.snapshot;
  for (const auto& [ln, c] : lines.rows) {
    CellResult cell;
    cell.dataset = c[0];
    cell.classifier = detail::parse_family_cell(c[1], ln, 2);
    cell.imputer = detail::parse_method_cell(c[2], ln, 3);
    cell.fraction = detail::parse_fraction_cell(c[3], ln, 4);
    cell.mask_id = detail::parse_csv_count(c[4], ln, 5);
    cell.mask = detail::parse_mask_text(c[5], ln, 6);
    cell.accuracy_full = detail::parse_csv_real(c[6], ln, 7);
    cell.accuracy_imputed = detail::parse_csv_real(c[7], ln, 8);
    cell.change_pp = detail::parse_csv_real(c[8], ln, 9);
    if (c[9] != "ok" && c[9] != "failed") throw ParseError("bad status '" + c[9] + "'", ln, 10);
    cell.failed = c[9] == "failed";
    cell.error = c[10];
    r.cells.push_back(std::move(cell));
  }
  r.aggregates = aggregate_cells(r.cells);
  r.full_accuracy = collect_full_accuracy(r.cells);
  return r;
}

}  // namespace featrec

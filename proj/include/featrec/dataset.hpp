#pragma once

// Tabular data model: a numeric feature matrix with binary labels, CSV
// ingestion and export, stratified train/test splitting and feature masks.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "featrec/errors.hpp"
#include "featrec/rng.hpp"

namespace featrec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;
using IndexList = std::vector<std::size_t>;

struct Dataset {
  Matrix features;  // n_rows x p
  Labels labels;    // values in {0, 1}
  std::vector<std::string> feature_names;
  std::string source_tag;

  std::size_t n_rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t n_features() const { return static_cast<std::size_t>(features.cols()); }

  Dataset select_rows(const IndexList& rows) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.features.row(static_cast<Eigen::Index>(i)) =
          features.row(static_cast<Eigen::Index>(rows[i]));
      out.labels.push_back(labels[rows[i]]);
    }
    out.feature_names = feature_names;
    out.source_tag = source_tag;
    return out;
  }

  Dataset with_features(Matrix replacement) const {
    Dataset out{std::move(replacement), labels, feature_names, source_tag};
    return out;
  }
};

inline bool has_both_classes(const Labels& labels) {
  bool zero = false, one = false;
  for (int y : labels) {
    zero |= (y == 0);
    one |= (y == 1);
  }
  return zero && one;
}

// Throws InvalidArgument when the dataset breaks a structural invariant.
inline void validate(const Dataset& ds, bool require_both_classes = true) {
  if (ds.n_rows() < 2 || ds.n_features() < 2) {
    throw InvalidArgument("dataset needs at least 2 rows and 2 features, got " +
                          std::to_string(ds.n_rows()) + "x" +
                          std::to_string(ds.n_features()));
  }
  if (ds.labels.size() != ds.n_rows()) {
    throw InvalidArgument("label count does not match row count");
  }
  if (ds.feature_names.size() != ds.n_features()) {
    throw InvalidArgument("feature name count does not match column count");
  }
  std::set<std::string> seen;
  for (const auto& name : ds.feature_names) {
    if (!seen.insert(name).second) {
      throw InvalidArgument("duplicate feature name '" + name + "'");
    }
  }
  if (!ds.features.allFinite()) {
    throw InvalidArgument("dataset contains non-finite values");
  }
  for (int y : ds.labels) {
    if (y != 0 && y != 1) throw InvalidArgument("labels must be 0 or 1");
  }
  if (require_both_classes && !has_both_classes(ds.labels)) {
    throw InvalidArgument("labels contain a single class");
  }
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    return std::nullopt;
  }
};

namespace detail {

inline std::string trim_cell(std::string_view cell) {
  std::size_t b = 0, e = cell.size();
  while (b < e && (cell[b] == ' ' || cell[b] == '\t' || cell[b] == '\r')) ++b;
  while (e > b && (cell[e - 1] == ' ' || cell[e - 1] == '\t' || cell[e - 1] == '\r')) --e;
  cell = cell.substr(b, e - b);
  if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
    cell = cell.substr(1, cell.size() - 2);
  }
  return std::string(cell);
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      current.push_back(c);
    } else if (c == ',' && !quoted) {
      cells.push_back(trim_cell(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  cells.push_back(trim_cell(current));
  return cells;
}

inline std::optional<double> parse_real(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

inline std::optional<long long> parse_integer(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ParseError("expected " + std::to_string(table.header.size()) +
                           " cells, found " + std::to_string(cells.size()),
                       line_no, cells.size());
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw ParseError("missing header row", 1, 0);
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_csv(in);
}

// Label merge rule. Only "threshold:t" is defined: label = 1 iff raw >= t.
struct MergeRule {
  double threshold = 0.0;

  static MergeRule parse(std::string_view text) {
    constexpr std::string_view prefix = "threshold:";
    if (text.substr(0, prefix.size()) != prefix) {
      throw InvalidArgument("unknown merge rule '" + std::string(text) + "'");
    }
    const auto value = detail::parse_real(text.substr(prefix.size()));
    if (!value) throw InvalidArgument("bad threshold in merge rule '" + std::string(text) + "'");
    return MergeRule{*value};
  }
};

// Builds a Dataset from an already-parsed table. Row numbers in errors
// count the header as row 1.
inline Dataset dataset_from_table(const CsvTable& table, std::string_view label_column,
                                  const std::optional<MergeRule>& merge = std::nullopt,
                                  std::string source_tag = {}) {
  const auto label_col = table.column(label_column);
  if (!label_col) {
    throw InvalidArgument("label column '" + std::string(label_column) + "' not found");
  }
  Dataset ds;
  ds.source_tag = std::move(source_tag);
  std::vector<std::size_t> feature_cols;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j == *label_col) continue;
    feature_cols.push_back(j);
    ds.feature_names.push_back(table.header[j]);
  }
  {
    std::set<std::string> seen;
    for (const auto& name : ds.feature_names) {
      if (!seen.insert(name).second) {
        throw InvalidArgument("duplicate feature name '" + name + "'");
      }
    }
  }

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  ds.features.resize(n, static_cast<Eigen::Index>(feature_cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < feature_cols.size(); ++c) {
      const auto& cell = row[feature_cols[c]];
      const auto value = detail::parse_real(cell);
      if (!value) {
        throw ParseError("cell '" + cell + "' in column '" +
                             table.header[feature_cols[c]] + "' is not a finite real",
                         static_cast<std::size_t>(i) + 2, feature_cols[c] + 1);
      }
      ds.features(i, static_cast<Eigen::Index>(c)) = *value;
    }
  }

  // Labels: threshold merge, integer pair, or category pair.
  std::vector<std::string> raw;
  raw.reserve(table.rows.size());
  for (const auto& row : table.rows) raw.push_back(row[*label_col]);

  if (merge) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto value = detail::parse_real(raw[i]);
      if (!value) {
        throw ParseError("label '" + raw[i] + "' is not numeric", i + 2, *label_col + 1);
      }
      ds.labels.push_back(*value >= merge->threshold ? 1 : 0);
    }
  } else {
    bool all_integer = true;
    std::vector<long long> ints;
    for (const auto& r : raw) {
      const auto value = detail::parse_integer(r);
      if (!value) {
        all_integer = false;
        break;
      }
      ints.push_back(*value);
    }
    if (all_integer) {
      std::set<long long> distinct(ints.begin(), ints.end());
      if (distinct.size() > 2) {
        throw InvalidArgument("label column has " + std::to_string(distinct.size()) +
                              " distinct values; a merge rule is required");
      }
      const long long low = distinct.empty() ? 0 : *distinct.begin();
      const bool zero_one = distinct.size() == 1 && (low == 0 || low == 1);
      for (long long v : ints) {
        ds.labels.push_back(zero_one ? static_cast<int>(v) : (v == low ? 0 : 1));
      }
    } else {
      std::set<std::string> distinct(raw.begin(), raw.end());
      if (distinct.size() > 2) {
        throw InvalidArgument("label column has " + std::to_string(distinct.size()) +
                              " categories; binary labels are required");
      }
      const std::string low = distinct.empty() ? std::string{} : *distinct.begin();
      for (const auto& r : raw) ds.labels.push_back(r == low ? 0 : 1);
    }
  }

  if (!has_both_classes(ds.labels)) {
    throw InvalidArgument("label column '" + std::string(label_column) +
                          "' contains a single class");
  }
  validate(ds);
  return ds;
}

inline Dataset load_csv(const std::string& path, std::string_view label_column,
                        const std::optional<MergeRule>& merge = std::nullopt) {
  auto table = read_csv_file(path);
  std::string tag = path;
  if (const auto slash = tag.find_last_of('/'); slash != std::string::npos) {
    tag = tag.substr(slash + 1);
  }
  if (const auto dot = tag.find_last_of('.'); dot != std::string::npos) {
    tag = tag.substr(0, dot);
  }
  return dataset_from_table(table, label_column, merge, tag);
}

// Shortest text that parses back to the same double.
inline std::string format_real(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

inline void write_csv(std::ostream& out, const Dataset& ds,
                      std::string_view label_column = "label") {
  for (std::size_t j = 0; j < ds.feature_names.size(); ++j) {
    out << ds.feature_names[j] << ',';
  }
  out << label_column << '\n';
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
      out << format_real(ds.features(i, j)) << ',';
    }
    out << ds.labels[static_cast<std::size_t>(i)] << '\n';
  }
}

inline void write_csv_file(const std::string& path, const Dataset& ds,
                           std::string_view label_column = "label") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_csv(out, ds, label_column);
  if (!out) throw IoError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitPair {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
  IndexList train_rows;  // row indices into the source
  IndexList test_rows;
};

// Stratified split. round(train_fraction * n) rows go to train,
// apportioned across classes by largest remainder (ties to class 0), each
// class keeping at least one row on both sides.
inline SplitPair split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie in (0, 1)");
  }
  if (!has_both_classes(ds.labels)) {
    throw InvalidArgument("split needs both classes present");
  }
  Rng rng(derive_seed(seed, "split"));
  IndexList members[2];
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    members[ds.labels[i] == 1 ? 1 : 0].push_back(i);
  }
  std::size_t quota[2];
  double remainder[2];
  for (int cls = 0; cls <= 1; ++cls) {
    if (members[cls].size() < 2) {
      throw InvalidArgument("class " + std::to_string(cls) + " has fewer than 2 rows");
    }
    const double exact = train_fraction * static_cast<double>(members[cls].size());
    quota[cls] = static_cast<std::size_t>(std::floor(exact));
    remainder[cls] = exact - std::floor(exact);
  }
  const auto total = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(ds.labels.size()) + 0.5));
  std::size_t assigned = quota[0] + quota[1];
  const int first = remainder[1] > remainder[0] ? 1 : 0;
  for (int cls : {first, 1 - first}) {
    if (assigned < total) {
      ++quota[cls];
      ++assigned;
    }
  }
  IndexList train_rows, test_rows;
  for (int cls = 0; cls <= 1; ++cls) {
    auto& m = members[cls];
    rng.shuffle(m);
    const std::size_t n_train = std::clamp<std::size_t>(quota[cls], 1, m.size() - 1);
    const auto cut = m.begin() + static_cast<std::ptrdiff_t>(n_train);
    train_rows.insert(train_rows.end(), m.begin(), cut);
    test_rows.insert(test_rows.end(), cut, m.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  SplitPair out{ds.select_rows(train_rows), ds.select_rows(test_rows), seed, train_rows,
                test_rows};
  return out;
}

// ---------------------------------------------------------------------------
// Feature masks

struct FeatureMask {
  IndexList missing;      // sorted, distinct
  double fraction = 0.0;  // 0 for explicit (single-feature or empty) masks

  bool empty() const { return missing.empty(); }
  bool contains(std::size_t j) const {
    return std::binary_search(missing.begin(), missing.end(), j);
  }
  // Complement of `missing` in [0, p).
  IndexList known(std::size_t p) const {
    IndexList out;
    for (std::size_t j = 0; j < p; ++j) {
      if (!contains(j)) out.push_back(j);
    }
    return out;
  }
  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
};

inline FeatureMask make_mask(IndexList indices, std::size_t p, double fraction = 0.0) {
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    throw InvalidArgument("mask indices must be distinct");
  }
  for (auto j : indices) {
    if (j >= p) throw InvalidArgument("mask index " + std::to_string(j) + " out of range");
  }
  if (!indices.empty() && indices.size() >= p) {
    throw InvalidArgument("mask must leave at least one known feature");
  }
  return FeatureMask{std::move(indices), fraction};
}

// Round half up with a floor of one missing feature.
inline std::size_t mask_size_for(double fraction, std::size_t p) {
  const double raw = fraction * static_cast<double>(p);
  const auto rounded = static_cast<std::size_t>(std::floor(raw + 0.5 + 1e-9));
  return std::max<std::size_t>(1, rounded);
}

namespace detail {
inline double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return r;
}
}  // namespace detail

// Empty `fractions` selects single-feature mode: every singleton mask.
inline std::vector<FeatureMask> make_masks(std::size_t p, const std::vector<double>& fractions,
                                           std::size_t n_masks_per_fraction,
                                           std::uint64_t seed) {
  std::vector<FeatureMask> masks;
  if (fractions.empty()) {
    for (std::size_t j = 0; j < p; ++j) masks.push_back(FeatureMask{{j}, 0.0});
    return masks;
  }
  if (n_masks_per_fraction < 1) throw InvalidArgument("n_masks_per_fraction must be >= 1");
  for (std::size_t f = 0; f < fractions.size(); ++f) {
    const double fraction = fractions[f];
    if (!(fraction > 0.0 && fraction <= 0.5)) {
      throw InvalidArgument("mask fractions must lie in (0, 0.5]");
    }
    const std::size_t m = mask_size_for(fraction, p);
    if (m >= p) {
      throw InvalidArgument("mask size " + std::to_string(m) + " leaves no known feature");
    }
    Rng rng(derive_seed(seed, "masks", static_cast<std::uint64_t>(f)));
    const double combos = detail::binomial(p, m);
    std::set<IndexList> seen;
    for (std::size_t k = 0; k < n_masks_per_fraction; ++k) {
      IndexList pick;
      const bool exhausted = static_cast<double>(seen.size()) >= combos;
      do {
        pick = sample_without_replacement(rng, p, m);
      } while (!exhausted && seen.count(pick) > 0);
      seen.insert(pick);
      masks.push_back(FeatureMask{std::move(pick), fraction});
    }
  }
  return masks;
}

}  // namespace featrec

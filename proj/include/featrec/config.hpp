#pragma once

// Experiment configuration in a flat key=value text format.
//
// Grammar, one entry per line:
//   line    := blank | "#" comment | key "=" value
//   key     := [a-z_]+
//   value   := text up to end of line, surrounding blanks trimmed
//
// Keys:
//   dataset       repeatable; "synthetic:<n>,<informative>,<redundant>" or
//                 "csv:<path>[,label=<column>][,merge=threshold:<t>]"
//   methods       comma list of imputer tags
//   classifiers   comma list of family tags
//   fractions     comma list of reals in (0, 0.5] and/or "single"
//   n_masks       masks per fraction, >= 1
//   seed          unsigned 64-bit integer
//   search_trials random-search budget per tuned model, >= 1
//   output_dir    directory for report files
//   li_ordering   ranking for the -li imputers: linear-imputability
//                 (default) or information-imputability
//
// Parsing never stops at the first problem. Every bad line, unknown key
// and invalid tag is collected and reported together in one ConfigError.

#include <array>
#include <charconv>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "featrec/classifier.hpp"
#include "featrec/dataset.hpp"
#include "featrec/imputer.hpp"
#include "featrec/synthetic.hpp"

namespace featrec {

// Fraction value standing for single-feature mode (one mask per feature).
inline constexpr double kSingleFeature = -1.0;

inline bool is_single_feature(double fraction) { return fraction == kSingleFeature; }

inline std::string fraction_label(double fraction) {
  return is_single_feature(fraction) ? "single" : format_real(fraction);
}

inline std::optional<double> parse_fraction(std::string_view text) {
  const std::string t = detail::trim_cell(text);
  if (t == "single") return kSingleFeature;
  const auto v = detail::parse_real(t);
  if (!v || !(*v > 0.0 && *v <= 0.5)) return std::nullopt;
  return v;
}

class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : InvalidArgument(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid configuration (" + std::to_string(p.size()) + " problem" +
                      (p.size() == 1 ? "" : "s") + ")";
    for (const auto& s : p) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

struct DatasetSpec {
  enum class Kind { synthetic, csv };
  Kind kind = Kind::synthetic;
  std::size_t n_rows = 0, n_informative = 0, n_redundant = 0;
  std::string path;
  std::string label_column = "label";
  std::optional<std::string> merge;

  std::string text() const {
    if (kind == Kind::synthetic) {
      return "synthetic:" + std::to_string(n_rows) + "," + std::to_string(n_informative) + "," +
             std::to_string(n_redundant);
    }
    std::string out = "csv:" + path + ",label=" + label_column;
    if (merge) out += ",merge=" + *merge;
    return out;
  }
};

// Parses "n,informative,redundant" as used by the generate command.
inline std::optional<std::array<std::size_t, 3>> parse_synthetic_shape(std::string_view text) {
  const auto parts = detail::split_csv_line(text);
  if (parts.size() != 3) return std::nullopt;
  std::array<std::size_t, 3> v{};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto x = detail::parse_integer(parts[i]);
    if (!x || *x < 0) return std::nullopt;
    v[i] = static_cast<std::size_t>(*x);
  }
  return v;
}

// Returns the problem description, or nullopt when the shape is usable.
inline std::optional<std::string> synthetic_shape_problem(std::size_t n, std::size_t inf, std::size_t red) {
  if (inf < 1) return "synthetic data needs at least one informative feature";
  if (inf + red < 2) return "synthetic data needs at least 2 features";
  if (n < 8) return "synthetic data needs at least 8 rows";
  return std::nullopt;
}

inline DatasetSpec parse_dataset_spec(std::string_view text) {
  const std::string t = detail::trim_cell(text);
  DatasetSpec spec;
  if (t.rfind("synthetic:", 0) == 0) {
    const auto shape = parse_synthetic_shape(std::string_view(t).substr(10));
    if (!shape) throw InvalidArgument("dataset '" + t + "': expected synthetic:<n>,<informative>,<redundant>");
    spec.n_rows = (*shape)[0];
    spec.n_informative = (*shape)[1];
    spec.n_redundant = (*shape)[2];
    if (auto p = synthetic_shape_problem(spec.n_rows, spec.n_informative, spec.n_redundant)) {
      throw InvalidArgument("dataset '" + t + "': " + *p);
    }
    return spec;
  }
  if (t.rfind("csv:", 0) != 0) throw InvalidArgument("dataset '" + t + "': expected a synthetic: or csv: prefix");
  spec.kind = DatasetSpec::Kind::csv;
  const auto parts = detail::split_csv_line(std::string_view(t).substr(4));
  if (parts.empty() || parts[0].empty()) throw InvalidArgument("dataset '" + t + "': missing path");
  spec.path = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    const std::string key = eq == std::string::npos ? parts[i] : parts[i].substr(0, eq);
    const std::string value = eq == std::string::npos ? "" : parts[i].substr(eq + 1);
    if (key == "label" && !value.empty()) {
      spec.label_column = value;
    } else if (key == "merge") {
      MergeRule::parse(value);  // throws on a bad rule
      spec.merge = value;
    } else {
      throw InvalidArgument("dataset '" + t + "': unknown option '" + parts[i] + "'");
    }
  }
  return spec;
}

// Synthetic datasets are generated from a seed derived from the master
// seed and the shape, so two specs with one seed never share draws.
inline Dataset load_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.kind == DatasetSpec::Kind::synthetic) {
    return generate_synthetic(spec.n_rows, spec.n_informative, spec.n_redundant,
                              derive_seed(seed, "dataset", spec.text()));
  }
  std::optional<MergeRule> merge;
  if (spec.merge) merge = MergeRule::parse(*spec.merge);
  return load_csv(spec.path, spec.label_column, merge);
}

struct RunConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<ImputerMethod> methods{kImputerMethods.begin(), kImputerMethods.end()};
  std::vector<ClassifierFamily> classifiers{kClassifierFamilies.begin(), kClassifierFamilies.end()};
  std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5};
  std::size_t n_masks = 10;
  std::uint64_t seed = kDefaultSeed;
  std::size_t search_trials = 20;
  std::string output_dir = "featrec_out";
  OrderCriterion li_ordering = OrderCriterion::linear_imputability;
};

// Raw entries in file order. Later set() calls for a scalar key replace the
// earlier value, which is how command-line flags override the file.
class ConfigEntries {
 public:
  struct Entry {
    std::string key, value;
    std::size_t line = 0;  // 0 when set programmatically
  };

  static ConfigEntries parse(std::string_view text, std::vector<std::string>& problems) {
    ConfigEntries out;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = detail::trim_cell(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        problems.push_back("line " + std::to_string(line_no) + ": expected key = value");
        continue;
      }
      Entry e{detail::trim_cell(std::string_view(t).substr(0, eq)),
              detail::trim_cell(std::string_view(t).substr(eq + 1)), line_no};
      if (e.key.empty()) {
        problems.push_back("line " + std::to_string(line_no) + ": empty key");
        continue;
      }
      out.entries_.push_back(std::move(e));
    }
    return out;
  }

  void set(const std::string& key, const std::string& value) {
    std::erase_if(entries_, [&](const Entry& e) { return e.key == key; });
    entries_.push_back({key, value, 0});
  }
  void add(const std::string& key, const std::string& value) { entries_.push_back({key, value, 0}); }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

namespace detail {

inline std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  for (auto& item : split_csv_line(text)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace detail

inline RunConfig build_run_config(const ConfigEntries& entries, std::vector<std::string> problems = {}) {
  RunConfig c;
  std::set<std::string> seen;
  bool dataset_given = false;
  for (const auto& e : entries.entries()) {
    const std::string where = e.line ? "line " + std::to_string(e.line) + ": " : "";
    const std::string ctx = where + e.key + ": ";
    const bool repeat = e.key != "dataset" && !seen.insert(e.key).second;
    if (repeat) {
      problems.push_back(ctx + "given more than once");
      continue;
    }
    if (e.key == "dataset") {
      dataset_given = true;
      try {
        c.datasets.push_back(parse_dataset_spec(e.value));
      } catch (const InvalidArgument& err) {
        problems.push_back(where + err.what());
      }
    } else if (e.key == "methods") {
      c.methods.clear();
      for (const auto& tag : detail::split_list(e.value)) {
        if (auto m = parse_imputer_method(tag)) {
          c.methods.push_back(*m);
        } else {
          problems.push_back(ctx + "unknown imputer '" + tag + "'");
        }
      }
      if (c.methods.empty()) problems.push_back(ctx + "empty list");
    } else if (e.key == "classifiers") {
      c.classifiers.clear();
      for (const auto& tag : detail::split_list(e.value)) {
        if (auto f = parse_classifier_family(tag)) {
          c.classifiers.push_back(*f);
        } else {
          problems.push_back(ctx + "unknown classifier '" + tag + "'");
        }
      }
      if (c.classifiers.empty()) problems.push_back(ctx + "empty list");
    } else if (e.key == "fractions") {
      c.fractions.clear();
      for (const auto& item : detail::split_list(e.value)) {
        if (auto f = parse_fraction(item)) {
          c.fractions.push_back(*f);
        } else {
          problems.push_back(ctx + "'" + item + "' is neither 'single' nor a real in (0, 0.5]");
        }
      }
      if (c.fractions.empty()) problems.push_back(ctx + "empty list");
    } else if (e.key == "n_masks" || e.key == "search_trials" || e.key == "seed") {
      const auto v = detail::parse_u64(e.value);
      const bool positive_needed = e.key != "seed";
      if (!v || (positive_needed && *v < 1)) {
        problems.push_back(ctx + "'" + e.value + "' is not " +
                           (positive_needed ? "an integer >= 1" : "an unsigned 64-bit integer"));
        continue;
      }
      const std::uint64_t u = *v;
      if (e.key == "n_masks") c.n_masks = u;
      else if (e.key == "search_trials") c.search_trials = u;
      else c.seed = u;
    } else if (e.key == "li_ordering") {
      if (e.value == to_string(OrderCriterion::linear_imputability)) {
        c.li_ordering = OrderCriterion::linear_imputability;
      } else if (e.value == to_string(OrderCriterion::information_imputability)) {
        c.li_ordering = OrderCriterion::information_imputability;
      } else {
        problems.push_back(ctx + "'" + e.value + "' is not linear-imputability or information-imputability");
      }
    } else if (e.key == "output_dir") {
      if (e.value.empty()) problems.push_back(ctx + "empty path");
      c.output_dir = e.value;
    } else {
      problems.push_back(where + "unknown key '" + e.key + "'");
    }
  }
  if (!dataset_given) problems.push_back("no dataset given");
  for (std::size_t a = 0; a < c.fractions.size(); ++a)
    for (std::size_t b = 0; b < a; ++b)
      if (c.fractions[a] == c.fractions[b]) problems.push_back("fractions: duplicate " + fraction_label(c.fractions[a]));
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

inline RunConfig parse_run_config(std::string_view text) {
  std::vector<std::string> problems;
  const auto entries = ConfigEntries::parse(text, problems);
  return build_run_config(entries, std::move(problems));
}

// Canonical snapshot, in a fixed key order. The text form parses back into
// an equal RunConfig.
inline std::vector<std::pair<std::string, std::string>> config_snapshot(const RunConfig& c) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& d : c.datasets) out.emplace_back("dataset", d.text());
  auto join = [](const auto& items, auto fn) {
    std::string s;
    for (const auto& x : items) s += (s.empty() ? "" : ",") + fn(x);
    return s;
  };
  out.emplace_back("methods", join(c.methods, [](ImputerMethod m) { return to_string(m); }));
  out.emplace_back("classifiers", join(c.classifiers, [](ClassifierFamily f) { return to_string(f); }));
  out.emplace_back("fractions", join(c.fractions, fraction_label));
  out.emplace_back("n_masks", std::to_string(c.n_masks));
  out.emplace_back("seed", std::to_string(c.seed));
  out.emplace_back("search_trials", std::to_string(c.search_trials));
  out.emplace_back("output_dir", c.output_dir);
  out.emplace_back("li_ordering", to_string(c.li_ordering));
  return out;
}

inline std::string format_snapshot(const std::vector<std::pair<std::string, std::string>>& snapshot,
                                   std::string_view line_prefix = "") {
  std::string out;
  for (const auto& [k, v] : snapshot) out += std::string(line_prefix) + k + "=" + v + "\n";
  return out;
}

}  // namespace featrec

#pragma once

// featrec command-line front end. run_cli() returns the process exit code:
//   0 success, 2 validation error, 3 some experiment cells failed,
//   4 I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "featrec/classifier.hpp"
#include "featrec/config.hpp"
#include "featrec/dataset.hpp"
#include "featrec/harness.hpp"
#include "featrec/imputer.hpp"
#include "featrec/report.hpp"
#include "featrec/synthetic.hpp"

namespace featrec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitPartialFailure = 3;
inline constexpr int kExitIo = 4;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 0;
  std::string config_path;
  std::string out;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// Column references are names or 0-based indices, comma separated.
inline IndexList resolve_columns(const std::string& list, const std::vector<std::string>& names) {
  IndexList out;
  for (const auto& item : detail::split_list(list)) {
    const auto it = std::find(names.begin(), names.end(), item);
    if (it != names.end()) {
      out.push_back(static_cast<std::size_t>(it - names.begin()));
      continue;
    }
    const auto idx = detail::parse_integer(item);
    if (!idx || *idx < 0 || static_cast<std::size_t>(*idx) >= names.size()) {
      throw InvalidArgument("unknown column '" + item + "'");
    }
    out.push_back(static_cast<std::size_t>(*idx));
  }
  return out;
}

// Seed and search budget for commands other than experiment: flag, then
// config file, then default.
struct TrainSettings {
  std::uint64_t seed = kDefaultSeed;
  std::size_t search_trials = 20;
};

inline TrainSettings train_settings(const GlobalFlags& g, std::optional<std::size_t> trials_flag) {
  TrainSettings t;
  if (!g.config_path.empty()) {
    std::vector<std::string> problems;
    const auto entries = ConfigEntries::parse(read_text_file(g.config_path), problems);
    for (const auto& e : entries.entries()) {
      if (e.key != "seed" && e.key != "search_trials") continue;
      const auto v = detail::parse_u64(e.value);
      if (!v || (e.key == "search_trials" && *v < 1)) problems.push_back(e.key + ": bad value '" + e.value + "'");
      else if (e.key == "seed") t.seed = *v;
      else t.search_trials = *v;
    }
    if (!problems.empty()) throw ConfigError(problems);
  }
  if (g.seed) t.seed = *g.seed;
  if (trials_flag) t.search_trials = *trials_flag;
  return t;
}

inline std::optional<MergeRule> merge_rule(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return MergeRule::parse(text);
}

// --- generate ------------------------------------------------------------------

inline int cmd_generate(const std::string& spec, std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  const auto shape = parse_synthetic_shape(spec);
  if (!shape) throw InvalidArgument("spec '" + spec + "' is not n,informative,redundant");
  if (auto p = synthetic_shape_problem((*shape)[0], (*shape)[1], (*shape)[2])) throw InvalidArgument(*p);
  if (out_path.empty()) throw InvalidArgument("generate needs --out");
  const Dataset ds = generate_synthetic((*shape)[0], (*shape)[1], (*shape)[2], seed);
  write_csv_file(out_path, ds);
  out << "wrote " << ds.n_rows() << " rows x " << ds.n_features() + 1 << " columns (" << ds.n_features()
      << " features + label) to " << out_path << "\n";
  return kExitOk;
}

// --- experiment ------------------------------------------------------------------

struct ExperimentFlags {
  std::vector<std::string> datasets;
  std::string methods, classifiers, fractions;
  std::optional<std::size_t> n_masks, search_trials;
  bool quiet = false;
};

inline RunConfig experiment_config(const GlobalFlags& g, const ExperimentFlags& f) {
  std::vector<std::string> problems;
  ConfigEntries entries;
  if (!g.config_path.empty()) entries = ConfigEntries::parse(read_text_file(g.config_path), problems);
  if (!f.datasets.empty()) {
    ConfigEntries merged;
    for (const auto& e : entries.entries())
      if (e.key != "dataset") merged.add(e.key, e.value);
    for (const auto& d : f.datasets) merged.add("dataset", d);
    entries = merged;
  }
  if (!f.methods.empty()) entries.set("methods", f.methods);
  if (!f.classifiers.empty()) entries.set("classifiers", f.classifiers);
  if (!f.fractions.empty()) entries.set("fractions", f.fractions);
  if (f.n_masks) entries.set("n_masks", std::to_string(*f.n_masks));
  if (f.search_trials) entries.set("search_trials", std::to_string(*f.search_trials));
  if (g.seed) entries.set("seed", std::to_string(*g.seed));
  if (!g.out.empty()) entries.set("output_dir", g.out);
  return build_run_config(entries, std::move(problems));
}

inline int cmd_experiment(const RunConfig& config, std::size_t jobs, std::ostream& log_out, bool quiet = false) {
  std::vector<Dataset> datasets;
  for (const auto& spec : config.datasets) datasets.push_back(load_dataset(spec, config.seed));

  ExperimentSettings s;
  s.n_masks = config.n_masks;
  s.seed = config.seed;
  s.search_trials = config.search_trials;
  s.jobs = jobs;
  s.imputer.li_ordering = config.li_ordering;
  s.config_snapshot = config_snapshot(config);
  if (!quiet) s.log = [&](const std::string& msg) { log_out << "[featrec] " << msg << "\n" << std::flush; };
  const ExperimentReport report = run_experiment(datasets, config.classifiers, config.methods, config.fractions, s);

  const std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_text_file(dir / "report.csv", emit_report(report, ReportFormat::csv));
  write_text_file(dir / "report.md", emit_report(report, ReportFormat::markdown));
  write_text_file(dir / "raw_cells.csv", emit_raw_cells(report));
  write_text_file(dir / "config.txt", format_snapshot(report.config_snapshot));
  const std::size_t failed = report.n_failed();
  if (!quiet) {
    log_out << "[featrec] wrote " << report.cells.size() << " cells (" << failed << " failed) to " << dir.string() << "\n";
  }
  return failed > 0 ? kExitPartialFailure : kExitOk;
}

// --- train-imputer / train-classifier ----------------------------------------------

inline int cmd_train_imputer(const std::string& data_path, const std::string& label, const std::string& merge,
                             const std::string& method_tag, const std::string& missing, const TrainSettings& t,
                             const std::string& out_path, std::ostream& out) {
  const ImputerMethod method = imputer_method_from_string(method_tag);
  if (out_path.empty()) throw InvalidArgument("train-imputer needs --out");
  const Dataset ds = load_csv(data_path, label, merge_rule(merge));
  const FeatureMask mask = make_mask(resolve_columns(missing, ds.feature_names), ds.n_features());
  ImputerConfig config;
  config.search_trials = t.search_trials;
  const ImputerModel model = fit_imputer(method, ds, mask, config, t.seed);
  save_imputer(model, out_path);
  out << "trained " << to_string(method) << " for missing {" << detail::mask_text(mask) << "} on " << ds.n_rows()
      << " rows; wrote " << out_path << "\n";
  return kExitOk;
}

inline int cmd_train_classifier(const std::string& data_path, const std::string& label, const std::string& merge,
                                const std::string& family_tag, const TrainSettings& t, const std::string& out_path,
                                std::ostream& out) {
  const ClassifierFamily family = classifier_family_from_string(family_tag);
  if (out_path.empty()) throw InvalidArgument("train-classifier needs --out");
  const Dataset ds = load_csv(data_path, label, merge_rule(merge));
  ClassifierConfig config;
  config.search_trials = t.search_trials;
  const ClassifierModel model = fit_classifier(family, ds, config, t.seed);
  save_classifier(model, out_path);
  out << "trained " << to_string(family) << " on " << ds.n_rows() << " rows (training accuracy "
      << format_real(accuracy(ds.labels, predict(model, ds.features))) << "); wrote " << out_path << "\n";
  return kExitOk;
}

// --- impute -------------------------------------------------------------------------

inline bool blank_cell(const std::string& s) { return s.empty() || s == "NA" || s == "nan" || s == "?"; }

// Input must hold the model's feature columns, except that declared
// missing columns may be absent, plus an optional label column. Known cells
// are copied to the output verbatim.
inline int cmd_impute(const std::string& model_path, const std::string& input_path, const std::string& label,
                      const std::optional<std::string>& declared, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) throw InvalidArgument("impute needs --out");
  const ImputerModel model = load_imputer(model_path);
  const CsvTable table = read_csv_file(input_path);
  const auto& names = model.feature_names;
  const std::size_t p = model.n_features;

  std::vector<std::optional<std::size_t>> source(p);
  for (std::size_t j = 0; j < p; ++j) source[j] = table.column(names[j]);
  const auto label_col = table.column(label);
  for (const auto& h : table.header) {
    if (h != label && std::find(names.begin(), names.end(), h) == names.end()) {
      throw MaskMismatchError("impute: column '" + h + "' is not a model feature");
    }
  }

  IndexList missing;
  if (declared) {
    missing = resolve_columns(*declared, names);
  } else {
    for (std::size_t j = 0; j < p; ++j) {
      bool all_blank = true;
      if (source[j]) {
        for (const auto& r : table.rows) all_blank = all_blank && blank_cell(r[*source[j]]);
      }
      if (!source[j] || all_blank) missing.push_back(j);
    }
  }
  const FeatureMask mask = make_mask(missing, p);
  for (std::size_t j = 0; j < p; ++j) {
    if (!source[j] && !mask.contains(j)) {
      throw MaskMismatchError("impute: column '" + names[j] + "' is absent but not declared missing");
    }
  }

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Dataset ds;
  ds.features = Matrix::Zero(n, static_cast<Eigen::Index>(p));
  ds.labels.assign(table.rows.size(), 0);
  ds.feature_names = names;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      if (mask.contains(j)) continue;
      const auto& cell = table.rows[static_cast<std::size_t>(i)][*source[j]];
      const auto v = detail::parse_real(cell);
      if (!v) {
        throw ParseError("cell '" + cell + "' in column '" + names[j] + "' is not a finite real",
                         static_cast<std::size_t>(i) + 2, *source[j] + 1);
      }
      ds.features(i, static_cast<Eigen::Index>(j)) = *v;
    }
  }
  Matrix filled = ds.features;
  if (!mask.empty()) filled = impute(model, ds, mask).features;

  std::ostringstream csv;
  for (std::size_t j = 0; j < p; ++j) csv << (j ? "," : "") << names[j];
  if (label_col) csv << "," << label;
  csv << "\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < p; ++j) {
      csv << (j ? "," : "");
      if (mask.contains(j)) csv << format_real(filled(i, static_cast<Eigen::Index>(j)));
      else csv << row[*source[j]];
    }
    if (label_col) csv << "," << row[*label_col];
    csv << "\n";
  }
  write_text_file(out_path, csv.str());
  out << "imputed {" << detail::mask_text(mask) << "} in " << n << " rows with " << to_string(model.method)
      << "; wrote " << out_path << "\n";
  return kExitOk;
}

// --- report ---------------------------------------------------------------------

// Rebuilds report.csv and report.md from raw_cells.csv, or re-renders an
// aggregate report.csv.
inline int cmd_report(const std::string& input_path, const std::string& out_dir, std::size_t top, std::ostream& out) {
  const std::string text = read_text_file(input_path);
  const bool raw = text.find(join_header(raw_cells_header())) != std::string::npos;
  ExperimentReport report = raw ? parse_raw_cells(text) : parse_report_csv(text);
  if (!out_dir.empty()) {
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    write_text_file(dir / "report.csv", emit_report(report, ReportFormat::csv));
    write_text_file(dir / "report.md", emit_report(report, ReportFormat::markdown));
    out << "wrote report.csv and report.md to " << dir.string() << "\n";
  } else {
    out << emit_report(report, ReportFormat::markdown);
  }
  if (top > 0) {
    if (!raw) throw InvalidArgument("--top needs raw_cells.csv, which carries full-data accuracies");
    std::vector<std::string> seen;
    for (const auto& [key, acc] : report.full_accuracy) {
      if (std::find(seen.begin(), seen.end(), key.first) != seen.end()) continue;
      seen.push_back(key.first);
      out << key.first << " top " << top << ":";
      for (auto f : select_top_models(report, key.first, top)) out << " " << to_string(f);
      out << "\n";
    }
  }
  return kExitOk;
}

// --- entry point ---------------------------------------------------------------

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"featrec: classification with entirely missing features"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  g.jobs = default_jobs();
  app.add_option("--seed", g.seed, "master seed (default " + std::to_string(kDefaultSeed) + ")");
  app.add_option("--jobs", g.jobs, "worker threads for experiment cells")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config_path, "key=value config file");
  app.add_option("--out", g.out, "output file, or directory for experiment and report");

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset CSV");
  std::string gen_spec;
  gen->add_option("spec", gen_spec, "n,informative,redundant")->required();

  auto* exp = app.add_subcommand("experiment", "run the imputation benchmark grid");
  ExperimentFlags ef;
  exp->add_option("--dataset", ef.datasets, "dataset spec, repeatable (replaces the config file's)");
  exp->add_option("--methods", ef.methods, "imputer tags, comma separated");
  exp->add_option("--classifiers", ef.classifiers, "classifier families, comma separated");
  exp->add_option("--fractions", ef.fractions, "missing fractions, comma separated, or 'single'");
  exp->add_option("--n-masks", ef.n_masks, "masks per fraction");
  exp->add_option("--search-trials", ef.search_trials, "random-search budget");
  exp->add_flag("--quiet", ef.quiet, "no progress lines");

  auto* imp = app.add_subcommand("impute", "fill declared missing columns with a trained imputer");
  std::string imp_model, imp_input, imp_label = "label";
  std::optional<std::string> imp_missing;
  imp->add_option("--model", imp_model, "imputer model JSON")->required();
  imp->add_option("input", imp_input, "input CSV")->required();
  imp->add_option("--missing", imp_missing, "declared missing columns (default: absent or blank columns)");
  imp->add_option("--label", imp_label, "label column, copied through when present");

  auto* ti = app.add_subcommand("train-imputer", "fit an imputer for one missing-column set");
  std::string ti_data, ti_label = "label", ti_merge, ti_method, ti_missing;
  std::optional<std::size_t> ti_trials;
  ti->add_option("data", ti_data, "training CSV")->required();
  ti->add_option("--label", ti_label, "label column");
  ti->add_option("--merge", ti_merge, "label merge rule, threshold:<t>");
  ti->add_option("--method", ti_method, "imputer tag")->required();
  ti->add_option("--missing", ti_missing, "columns to impute (names or 0-based indices)")->required();
  ti->add_option("--search-trials", ti_trials, "random-search budget");

  auto* tc = app.add_subcommand("train-classifier", "fit a classifier on complete data");
  std::string tc_data, tc_label = "label", tc_merge, tc_family;
  std::optional<std::size_t> tc_trials;
  tc->add_option("data", tc_data, "training CSV")->required();
  tc->add_option("--label", tc_label, "label column");
  tc->add_option("--merge", tc_merge, "label merge rule, threshold:<t>");
  tc->add_option("--family", tc_family, "LR, MLP, KNN, NB, GBT or RF")->required();
  tc->add_option("--search-trials", tc_trials, "random-search budget");

  auto* rep = app.add_subcommand("report", "render report files from raw_cells.csv or report.csv");
  std::string rep_input;
  std::size_t rep_top = 0;
  rep->add_option("input", rep_input, "raw_cells.csv or report.csv")->required();
  rep->add_option("--top", rep_top, "print the n best classifiers per dataset");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "featrec: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_spec, train_settings(g, std::nullopt).seed, g.out, out);
    if (exp->parsed()) return cmd_experiment(experiment_config(g, ef), g.jobs, err, ef.quiet);
    if (imp->parsed()) return cmd_impute(imp_model, imp_input, imp_label, imp_missing, g.out, out);
    if (ti->parsed()) {
      return cmd_train_imputer(ti_data, ti_label, ti_merge, ti_method, ti_missing, train_settings(g, ti_trials), g.out, out);
    }
    if (tc->parsed()) return cmd_train_classifier(tc_data, tc_label, tc_merge, tc_family, train_settings(g, tc_trials), g.out, out);
    if (rep->parsed()) return cmd_report(rep_input, g.out, rep_top, out);
  } catch (const IoError& e) {
    err << "featrec: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "featrec: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace featrec::cli

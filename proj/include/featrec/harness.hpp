#pragma once

// Experiment protocol. For each dataset: split 70/30, fit every classifier
// once on the complete training part, then for every (fraction, mask,
// imputer) fit the imputer on training data, impute the masked test part
// and score every classifier on it. The headline number is the accuracy
// change in percentage points against the full test set.
//
// Hyper-parameter search for the MLP and boosted-tree imputers runs once
// per (dataset, imputer, fraction) on the first mask of that fraction and
// the result is reused for the remaining masks.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "featrec/classifier.hpp"
#include "featrec/config.hpp"
#include "featrec/dataset.hpp"
#include "featrec/imputer.hpp"

namespace featrec {

inline constexpr double kTrainFraction = 0.7;

struct CellResult {
  std::string dataset;
  ClassifierFamily classifier = ClassifierFamily::LR;
  ImputerMethod imputer = ImputerMethod::knn;
  double fraction = 0.0;  // kSingleFeature in single-feature mode
  std::size_t mask_id = 0;
  FeatureMask mask;
  double accuracy_full = std::numeric_limits<double>::quiet_NaN();
  double accuracy_imputed = std::numeric_limits<double>::quiet_NaN();
  double change_pp = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string error;
};

inline double change_in_points(double accuracy_imputed, double accuracy_full) {
  return (accuracy_imputed - accuracy_full) * 100.0;
}

struct GridKey {
  std::string dataset;
  ClassifierFamily classifier = ClassifierFamily::LR;
  ImputerMethod imputer = ImputerMethod::knn;
  double fraction = 0.0;
  friend bool operator==(const GridKey&, const GridKey&) = default;
  friend auto operator<=>(const GridKey& a, const GridKey& b) {
    return std::tie(a.dataset, a.classifier, a.imputer, a.fraction) <=>
           std::tie(b.dataset, b.classifier, b.imputer, b.fraction);
  }
};

inline GridKey key_of(const CellResult& c) { return {c.dataset, c.classifier, c.imputer, c.fraction}; }

// Statistics over the successful cells of one grid point. n == 0 marks a
// grid point whose every cell failed. The std uses the n-1 denominator and
// is NaN when n < 2.
struct Aggregate {
  double mean_change_pp = std::numeric_limits<double>::quiet_NaN();
  double std_change_pp = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
  std::size_t n_failed = 0;

  bool failed() const { return n == 0; }
};

using AggregateMap = std::map<GridKey, Aggregate>;
using FullAccuracyMap = std::map<std::pair<std::string, ClassifierFamily>, double>;

struct ExperimentReport {
  std::vector<CellResult> cells;
  AggregateMap aggregates;
  FullAccuracyMap full_accuracy;
  std::vector<std::pair<std::string, std::string>> config_snapshot;
  std::uint64_t seed = kDefaultSeed;

  std::size_t n_failed() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return c.failed; }));
  }
};

// Cells are visited in order, so the sums are reproducible.
inline AggregateMap aggregate_cells(const std::vector<CellResult>& cells) {
  std::map<GridKey, std::vector<double>> values;
  AggregateMap out;
  for (const auto& c : cells) {
    auto& agg = out[key_of(c)];
    auto& v = values[key_of(c)];
    if (c.failed) {
      ++agg.n_failed;
    } else {
      v.push_back(c.change_pp);
    }
  }
  for (auto& [key, agg] : out) {
    const auto& v = values[key];
    agg.n = v.size();
    if (v.empty()) continue;
    double sum = 0.0;
    for (double x : v) sum += x;
    agg.mean_change_pp = sum / static_cast<double>(v.size());
    if (v.size() >= 2) {
      double ss = 0.0;
      for (double x : v) ss += (x - agg.mean_change_pp) * (x - agg.mean_change_pp);
      agg.std_change_pp = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
  }
  return out;
}

inline FullAccuracyMap collect_full_accuracy(const std::vector<CellResult>& cells) {
  FullAccuracyMap out;
  for (const auto& c : cells) {
    if (std::isfinite(c.accuracy_full)) out.emplace(std::make_pair(c.dataset, c.classifier), c.accuracy_full);
  }
  return out;
}

// Top-n classifiers on the complete test data. Equal accuracies keep the
// fixed family order LR, MLP, KNN, NB, GBT, RF.
inline std::vector<ClassifierFamily> select_top_models(const ExperimentReport& report, const std::string& dataset,
                                                       std::size_t n) {
  std::vector<std::pair<ClassifierFamily, double>> found;
  for (const auto& [key, acc] : report.full_accuracy) {
    if (key.first == dataset) found.emplace_back(key.second, acc);
  }
  if (found.empty()) throw InvalidArgument("select_top_models: unknown dataset '" + dataset + "'");
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return family_rank(a.first) < family_rank(b.first);
  });
  std::vector<ClassifierFamily> out;
  for (std::size_t i = 0; i < std::min(n, found.size()); ++i) out.push_back(found[i].first);
  return out;
}

// Runs fn(0..count-1) on up to `jobs` threads. fn must not throw.
inline void parallel_for(std::size_t jobs, std::size_t count, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct ExperimentSettings {
  std::size_t n_masks = 10;
  std::uint64_t seed = kDefaultSeed;
  std::size_t search_trials = 20;
  std::size_t jobs = 1;  // 0 picks the hardware thread count
  double train_fraction = kTrainFraction;
  // Base configurations; search_trials above replaces their own budgets.
  ImputerConfig imputer;
  ClassifierConfig classifier;
  std::vector<std::pair<std::string, std::string>> config_snapshot;
  std::function<void(const std::string&)> log;
};

inline std::uint64_t cell_seed(std::uint64_t master, const std::string& dataset, double fraction,
                               std::size_t mask_id, ImputerMethod method) {
  return derive_seed(master, dataset, fraction_label(fraction), static_cast<std::uint64_t>(mask_id), to_string(method));
}

namespace detail {

inline Dataset blank_columns(Dataset ds, const FeatureMask& mask) {
  for (auto j : mask.missing) ds.features.col(static_cast<Eigen::Index>(j)).setConstant(std::numeric_limits<double>::quiet_NaN());
  return ds;
}

inline std::string error_text(const std::exception& e) { return e.what(); }

struct FittedClassifier {
  std::optional<ClassifierModel> model;
  double accuracy_full = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

inline std::vector<FeatureMask> masks_for(std::size_t p, double fraction, std::size_t n_masks, std::uint64_t seed,
                                          const std::string& dataset) {
  if (is_single_feature(fraction)) return make_masks(p, {}, 0, 0);
  return make_masks(p, {fraction}, n_masks, derive_seed(seed, dataset, "masks", fraction_label(fraction)));
}

}  // namespace detail

// Scores one imputer on one mask for every fitted classifier. Failures of
// the imputer or of a classifier become failed cells.
inline std::vector<CellResult> evaluate_cell(const std::string& dataset, const SplitPair& parts,
                                             const std::vector<ClassifierFamily>& classifiers,
                                             const std::vector<detail::FittedClassifier>& fitted,
                                             ImputerMethod method, double fraction, std::size_t mask_id,
                                             const FeatureMask& mask, const ImputerConfig& config,
                                             std::uint64_t seed) {
  std::vector<CellResult> out;
  for (std::size_t c = 0; c < classifiers.size(); ++c) {
    CellResult r;
    r.dataset = dataset;
    r.classifier = classifiers[c];
    r.imputer = method;
    r.fraction = fraction;
    r.mask_id = mask_id;
    r.mask = mask;
    r.accuracy_full = fitted[c].accuracy_full;
    out.push_back(std::move(r));
  }
  auto fail_all = [&](const std::string& why) {
    for (auto& r : out) {
      r.failed = true;
      r.error = why;
    }
  };
  std::optional<Dataset> imputed;
  try {
    const ImputerModel model = fit_imputer_fixed(method, parts.train, mask, config, seed);
    const Dataset input = method == ImputerMethod::identity ? parts.test : detail::blank_columns(parts.test, mask);
    imputed = impute(model, input, mask);
  } catch (const std::exception& e) {
    fail_all("imputer " + to_string(method) + ": " + detail::error_text(e));
    return out;
  }
  for (std::size_t c = 0; c < classifiers.size(); ++c) {
    auto& r = out[c];
    if (!fitted[c].model) {
      r.failed = true;
      r.error = "classifier " + to_string(classifiers[c]) + ": " + fitted[c].error;
      continue;
    }
    try {
      r.accuracy_imputed = accuracy(parts.test.labels, predict(*fitted[c].model, imputed->features));
      r.change_pp = change_in_points(r.accuracy_imputed, r.accuracy_full);
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = "classifier " + to_string(classifiers[c]) + ": " + detail::error_text(e);
    }
  }
  return out;
}

inline void check_experiment_inputs(const std::vector<Dataset>& datasets, const std::vector<ClassifierFamily>& classifiers,
                                    const std::vector<ImputerMethod>& imputers, const std::vector<double>& fractions,
                                    const ExperimentSettings& s) {
  std::vector<std::string> problems;
  if (datasets.empty()) problems.push_back("no datasets");
  if (classifiers.empty()) problems.push_back("no classifiers");
  if (imputers.empty()) problems.push_back("no imputers");
  if (fractions.empty()) problems.push_back("no fractions");
  if (s.n_masks < 1) problems.push_back("n_masks must be >= 1");
  if (s.search_trials < 1) problems.push_back("search_trials must be >= 1");
  for (double f : fractions) {
    if (!is_single_feature(f) && !(f > 0.0 && f <= 0.5)) {
      problems.push_back("fraction " + format_real(f) + " outside (0, 0.5]");
    }
  }
  std::set<std::string> tags;
  for (const auto& d : datasets) {
    if (!tags.insert(d.source_tag).second) problems.push_back("duplicate dataset tag '" + d.source_tag + "'");
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

inline ExperimentReport run_experiment(const std::vector<Dataset>& datasets,
                                       const std::vector<ClassifierFamily>& classifiers,
                                       const std::vector<ImputerMethod>& imputers,
                                       const std::vector<double>& fractions, const ExperimentSettings& s) {
  check_experiment_inputs(datasets, classifiers, imputers, fractions, s);
  auto log = [&](const std::string& msg) {
    if (s.log) s.log(msg);
  };
  ImputerConfig base = s.imputer;
  base.search_trials = s.search_trials;
  ClassifierConfig cbase = s.classifier;
  cbase.search_trials = s.search_trials;

  ExperimentReport report;
  report.seed = s.seed;
  report.config_snapshot = s.config_snapshot;

  for (const Dataset& ds : datasets) {
    const std::string& tag = ds.source_tag;
    const SplitPair parts = split(ds, s.train_fraction, derive_seed(s.seed, tag, "split"));

    std::vector<detail::FittedClassifier> fitted(classifiers.size());
    parallel_for(s.jobs, classifiers.size(), [&](std::size_t c) {
      try {
        const auto family = classifiers[c];
        fitted[c].model = fit_classifier(family, parts.train, cbase, derive_seed(s.seed, tag, "classifier", to_string(family)));
        fitted[c].accuracy_full = accuracy(parts.test.labels, predict(*fitted[c].model, parts.test.features));
      } catch (const std::exception& e) {
        fitted[c].error = e.what();
      }
    });
    for (std::size_t c = 0; c < classifiers.size(); ++c) {
      log(tag + ": " + to_string(classifiers[c]) +
          (fitted[c].model ? " full-data accuracy " + format_real(fitted[c].accuracy_full) : " failed: " + fitted[c].error));
    }

    std::vector<std::vector<FeatureMask>> masks;
    for (double f : fractions) masks.push_back(detail::masks_for(ds.n_features(), f, s.n_masks, s.seed, tag));

    // One tuning job per (fraction, imputer).
    struct Tuned {
      std::optional<ImputerConfig> config;
      std::string error;
    };
    std::vector<Tuned> tuned(fractions.size() * imputers.size());
    parallel_for(s.jobs, tuned.size(), [&](std::size_t t) {
      const std::size_t fi = t / imputers.size(), mi = t % imputers.size();
      try {
        tuned[t].config = tune_imputer(imputers[mi], parts.train, masks[fi].front(), base,
                                       derive_seed(s.seed, tag, fraction_label(fractions[fi]), "tune", to_string(imputers[mi])));
      } catch (const std::exception& e) {
        tuned[t].error = e.what();
      }
    });

    struct Job {
      std::size_t fi, mask_id, mi;
    };
    std::vector<Job> jobs;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi)
      for (std::size_t k = 0; k < masks[fi].size(); ++k)
        for (std::size_t mi = 0; mi < imputers.size(); ++mi) jobs.push_back({fi, k, mi});
    std::vector<std::vector<CellResult>> results(jobs.size());
    parallel_for(s.jobs, jobs.size(), [&](std::size_t j) {
      const Job& job = jobs[j];
      const double f = fractions[job.fi];
      const ImputerMethod m = imputers[job.mi];
      const Tuned& t = tuned[job.fi * imputers.size() + job.mi];
      if (!t.config) {
        results[j] = evaluate_cell(tag, parts, classifiers, fitted, m, f, job.mask_id, masks[job.fi][job.mask_id], base, 0);
        for (auto& r : results[j]) {
          r.failed = true;
          r.error = "imputer " + to_string(m) + " tuning: " + t.error;
          r.accuracy_imputed = r.change_pp = std::numeric_limits<double>::quiet_NaN();
        }
        return;
      }
      results[j] = evaluate_cell(tag, parts, classifiers, fitted, m, f, job.mask_id, masks[job.fi][job.mask_id],
                                 *t.config, cell_seed(s.seed, tag, f, job.mask_id, m));
    });
    std::size_t failed = 0;
    for (auto& r : results) {
      for (auto& c : r) {
        failed += c.failed ? 1 : 0;
        report.cells.push_back(std::move(c));
      }
    }
    log(tag + ": " + std::to_string(jobs.size() * classifiers.size()) + " cells, " + std::to_string(failed) + " failed");
  }
  report.aggregates = aggregate_cells(report.cells);
  report.full_accuracy = collect_full_accuracy(report.cells);
  return report;
}

inline ExperimentReport run_experiment(const std::vector<Dataset>& datasets,
                                       const std::vector<ClassifierFamily>& classifiers,
                                       const std::vector<ImputerMethod>& imputers,
                                       const std::vector<double>& fractions, std::size_t n_masks,
                                       std::uint64_t seed) {
  ExperimentSettings s;
  s.n_masks = n_masks;
  s.seed = seed;
  return run_experiment(datasets, classifiers, imputers, fractions, s);
}

}  // namespace featrec

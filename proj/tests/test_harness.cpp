#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "featrec/config.hpp"
#include "featrec/harness.hpp"
#include "featrec/report.hpp"
#include "featrec/synthetic.hpp"
#include "test_util.hpp"

namespace featrec {
namespace {

// Fixed small models so a whole grid runs in well under a second.
ExperimentSettings quick_settings(std::uint64_t seed = 3) {
  ExperimentSettings s;
  s.seed = seed;
  s.n_masks = 2;
  s.search_trials = 1;
  s.imputer.mlp = MlpParams{{8}, Activation::tanh, 1e-2, 10, 64, 1e-4};
  s.imputer.gbt = GbtParams{10, 2, 0.3, 1.0, 1.0};
  s.imputer.mice_draws = 10;
  s.classifier.mlp = MlpParams{{8}, Activation::tanh, 1e-2, 20, 64, 1e-4};
  s.classifier.gbt = GbtParams{20, 2, 0.3, 1.0, 1.0};
  s.classifier.forest = RandomForestParams{10, 0, 0, true};
  s.classifier.knn_k = 5;
  s.classifier.logistic = LogisticParams{};
  return s;
}

Dataset small_synthetic(std::uint64_t seed = 21) { return generate_synthetic(300, 4, 2, seed); }

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

const std::vector<ClassifierFamily> kAllFamilies{kClassifierFamilies.begin(), kClassifierFamilies.end()};
const std::vector<ImputerMethod> kAllMethods{kImputerMethods.begin(), kImputerMethods.end()};

// --- experiment grid -----------------------------------------------------------------

TEST(Experiment, IdentityImputerGivesZeroChangeEverywhere) {
  const auto report = run_experiment({small_synthetic()}, kAllFamilies, {ImputerMethod::identity},
                                     {0.1, 0.2, 0.3, 0.4, 0.5}, quick_settings());
  ASSERT_EQ(report.cells.size(), 5u * 2u * 6u);
  for (const auto& c : report.cells) {
    ASSERT_FALSE(c.failed) << c.error;
    EXPECT_EQ(c.change_pp, 0.0);
  }
}

TEST(Experiment, CellsSatisfyTheChangeDefinitionAndGridIsComplete) {
  const auto report = run_experiment({small_synthetic()}, kAllFamilies, kAllMethods, {kSingleFeature, 0.3},
                                     quick_settings());
  // 6 singleton masks + 2 random masks, 8 imputers, 6 classifiers.
  EXPECT_EQ(report.cells.size(), (6u + 2u) * 8u * 6u);
  EXPECT_EQ(report.n_failed(), 0u);
  for (const auto& c : report.cells) {
    EXPECT_NEAR(c.change_pp, (c.accuracy_imputed - c.accuracy_full) * 100.0, 1e-12);
    EXPECT_EQ(c.accuracy_full, report.full_accuracy.at({c.dataset, c.classifier}));
  }
  EXPECT_EQ(report.aggregates.size(), 2u * 8u * 6u);
}

TEST(Experiment, AggregatesMatchAnIndependentRecomputation) {
  const auto report = run_experiment({small_synthetic()}, {ClassifierFamily::LR, ClassifierFamily::NB},
                                     {ImputerMethod::knn, ImputerMethod::linreg_li}, {kSingleFeature, 0.2, 0.5},
                                     quick_settings());
  for (const auto& [key, agg] : report.aggregates) {
    std::vector<double> v;
    for (const auto& c : report.cells)
      if (key_of(c) == key && !c.failed) v.push_back(c.change_pp);
    ASSERT_EQ(agg.n, v.size());
    long double sum = 0;
    for (double x : v) sum += x;
    const double mean = static_cast<double>(sum / v.size());
    long double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    EXPECT_NEAR(agg.mean_change_pp, mean, 1e-12);
    EXPECT_NEAR(agg.std_change_pp, std::sqrt(static_cast<double>(ss / (v.size() - 1))), 1e-12);
  }
}

TEST(Experiment, EmptyMaskGivesZeroChangeForEveryImputer) {
  const Dataset ds = small_synthetic();
  const SplitPair parts = split(ds, kTrainFraction, 1);
  const auto s = quick_settings();
  std::vector<detail::FittedClassifier> fitted(kAllFamilies.size());
  for (std::size_t c = 0; c < kAllFamilies.size(); ++c) {
    fitted[c].model = fit_classifier(kAllFamilies[c], parts.train, s.classifier, 5);
    fitted[c].accuracy_full = accuracy(parts.test.labels, predict(*fitted[c].model, parts.test.features));
  }
  for (auto m : kAllMethods) {
    for (const auto& r : evaluate_cell("d", parts, kAllFamilies, fitted, m, 0.1, 0, FeatureMask{}, s.imputer, 7)) {
      ASSERT_FALSE(r.failed) << r.error;
      EXPECT_EQ(r.change_pp, 0.0) << to_string(m);
    }
  }
}

TEST(Experiment, DeterministicAcrossRunsAndThreadCounts) {
  auto s = quick_settings(11);
  const std::vector<double> fractions{0.2, 0.5};
  const auto a = run_experiment({small_synthetic()}, kAllFamilies, kAllMethods, fractions, s);
  const auto b = run_experiment({small_synthetic()}, kAllFamilies, kAllMethods, fractions, s);
  s.jobs = 3;
  const auto c = run_experiment({small_synthetic()}, kAllFamilies, kAllMethods, fractions, s);
  EXPECT_EQ(emit_raw_cells(a), emit_raw_cells(b));
  EXPECT_EQ(emit_raw_cells(a), emit_raw_cells(c));
  EXPECT_EQ(emit_report(a, ReportFormat::csv), emit_report(c, ReportFormat::csv));
}

TEST(Experiment, AddingAMethodLeavesOtherCellsUnchanged) {
  const auto s = quick_settings(12);
  const auto only = run_experiment({small_synthetic()}, {ClassifierFamily::LR}, {ImputerMethod::mice}, {0.3}, s);
  const auto both = run_experiment({small_synthetic()}, {ClassifierFamily::LR},
                                   {ImputerMethod::knn, ImputerMethod::mice}, {0.3}, s);
  std::vector<double> from_both;
  for (const auto& c : both.cells)
    if (c.imputer == ImputerMethod::mice) from_both.push_back(c.accuracy_imputed);
  ASSERT_EQ(from_both.size(), only.cells.size());
  for (std::size_t i = 0; i < from_both.size(); ++i) EXPECT_TRUE(same_bits(from_both[i], only.cells[i].accuracy_imputed));
}

TEST(Experiment, FailedCellsAreRecordedNotDropped) {
  // Information ordering refuses more than 8 dimensions, and this dataset
  // has 10 features.
  auto s = quick_settings();
  s.imputer.li_ordering = OrderCriterion::information_imputability;
  const Dataset wide = generate_synthetic(200, 7, 3, 4);
  const auto report = run_experiment({wide}, {ClassifierFamily::LR, ClassifierFamily::NB},
                                     {ImputerMethod::knn, ImputerMethod::linreg_li}, {0.1}, s);
  ASSERT_EQ(report.cells.size(), 2u * 2u * 2u);
  std::size_t failed = 0;
  for (const auto& c : report.cells) {
    if (c.imputer == ImputerMethod::linreg_li) {
      EXPECT_TRUE(c.failed);
      EXPECT_NE(c.error.find("limit is 8"), std::string::npos) << c.error;
      EXPECT_TRUE(std::isfinite(c.accuracy_full));
      ++failed;
    } else {
      EXPECT_FALSE(c.failed);
    }
  }
  EXPECT_EQ(failed, report.n_failed());
  const auto& agg = report.aggregates.at(GridKey{wide.source_tag, ClassifierFamily::LR, ImputerMethod::linreg_li, 0.1});
  EXPECT_TRUE(agg.failed());
  EXPECT_EQ(agg.n_failed, 2u);
  const std::string md = emit_report(report, ReportFormat::markdown);
  EXPECT_NE(md.find("| linreg-li | FAILED | FAILED |"), std::string::npos) << md;
}

TEST(Experiment, InvalidInputsAreRejectedBeforeAnyWork) {
  const auto s = quick_settings();
  EXPECT_THROW(run_experiment({}, kAllFamilies, kAllMethods, {0.1}, s), ConfigError);
  EXPECT_THROW(run_experiment({small_synthetic()}, {}, kAllMethods, {0.1}, s), ConfigError);
  EXPECT_THROW(run_experiment({small_synthetic()}, kAllFamilies, kAllMethods, {0.6}, s), ConfigError);
  EXPECT_THROW(run_experiment({small_synthetic(), small_synthetic(5)}, kAllFamilies, kAllMethods, {0.1}, s),
               ConfigError);
}

// --- top models --------------------------------------------------------------------------

ExperimentReport report_with_accuracies(const std::string& dataset, const std::vector<double>& acc) {
  ExperimentReport r;
  for (std::size_t i = 0; i < acc.size(); ++i) r.full_accuracy[{dataset, kClassifierFamilies[i]}] = acc[i];
  return r;
}

TEST(TopModels, WineAndCancerSelections) {
  using F = ClassifierFamily;
  const auto wine = report_with_accuracies("wine", {0.751, 0.682, 0.696, 0.696, 0.786, 0.773});
  EXPECT_EQ(select_top_models(wine, "wine", 2), (std::vector<F>{F::GBT, F::RF}));
  const auto cancer = report_with_accuracies("cancer", {0.966, 0.956, 0.961, 0.941, 0.961, 0.966});
  EXPECT_EQ(select_top_models(cancer, "cancer", 2), (std::vector<F>{F::LR, F::RF}));
}

TEST(TopModels, TiesFollowFamilyOrderAndNCoversAll) {
  using F = ClassifierFamily;
  const auto r = report_with_accuracies("d", {0.5, 0.9, 0.9, 0.9, 0.1, 0.9});
  EXPECT_EQ(select_top_models(r, "d", 3), (std::vector<F>{F::MLP, F::KNN, F::NB}));
  EXPECT_EQ(select_top_models(r, "d", 6).size(), 6u);
  EXPECT_EQ(select_top_models(r, "d", 60).size(), 6u);
  EXPECT_THROW(select_top_models(r, "other", 2), InvalidArgument);
}

// --- report rendering ----------------------------------------------------------------------

TEST(Report, TwoDecimalHalfEven) {
  using detail::fixed2_half_even;
  EXPECT_EQ(fixed2_half_even(-0.16), "-0.16");
  EXPECT_EQ(fixed2_half_even(0.125), "0.12");
  EXPECT_EQ(fixed2_half_even(0.135), "0.14");
  EXPECT_EQ(fixed2_half_even(-0.125), "-0.12");
  EXPECT_EQ(fixed2_half_even(0.005), "0.00");
  EXPECT_EQ(fixed2_half_even(0.015), "0.02");
  EXPECT_EQ(fixed2_half_even(0.0051), "0.01");
  EXPECT_EQ(fixed2_half_even(0.995), "1.00");
  EXPECT_EQ(fixed2_half_even(-0.001), "0.00");
  EXPECT_EQ(fixed2_half_even(0.0), "0.00");
  EXPECT_EQ(fixed2_half_even(-10.0), "-10.00");
  EXPECT_EQ(fixed2_half_even(99.999), "100.00");
  EXPECT_EQ(fixed2_half_even(12345.678), "12345.68");
  EXPECT_EQ(fixed2_half_even(1e-300), "0.00");
  EXPECT_EQ(fixed2_half_even(2.5e-3), "0.00");
}

ExperimentReport hand_report() {
  ExperimentReport r;
  r.config_snapshot = {{"seed", "7"}, {"methods", "knn"}};
  r.aggregates[GridKey{"cancer", ClassifierFamily::LR, ImputerMethod::knn, kSingleFeature}] = Aggregate{-0.16, 0.35, 9, 0};
  r.aggregates[GridKey{"cancer", ClassifierFamily::RF, ImputerMethod::knn, kSingleFeature}] = Aggregate{};
  r.aggregates[GridKey{"cancer", ClassifierFamily::LR, ImputerMethod::mice, kSingleFeature}] =
      Aggregate{1.0 / 3.0, 0.1 + 0.2, 9, 0};
  r.full_accuracy[{"cancer", ClassifierFamily::LR}] = 0.966;
  r.full_accuracy[{"cancer", ClassifierFamily::RF}] = 0.966;
  return r;
}

TEST(Report, MarkdownCellsAndFailureMarker) {
  const std::string md = emit_report(hand_report(), ReportFormat::markdown);
  EXPECT_NE(md.find("| knn | -0.16 ± 0.35 | FAILED |"), std::string::npos) << md;
  EXPECT_NE(md.find("| mice | 0.33 ± 0.30 |"), std::string::npos) << md;
  EXPECT_NE(md.find("seed=7\n"), std::string::npos);
}

TEST(Report, CsvRoundTripIsExact) {
  const auto original = hand_report();
  const std::string csv = emit_report(original, ReportFormat::csv);
  EXPECT_EQ(csv.substr(0, 10), "# seed=7\n#");
  EXPECT_NE(csv.find("dataset,classifier,imputer,fraction,mean_change_pp,std_change_pp,n\n"), std::string::npos);
  const auto parsed = parse_report_csv(csv);
  EXPECT_EQ(parsed.config_snapshot, original.config_snapshot);
  ASSERT_EQ(parsed.aggregates.size(), original.aggregates.size());
  for (const auto& [k, a] : original.aggregates) {
    const auto& b = parsed.aggregates.at(k);
    EXPECT_TRUE(same_bits(a.mean_change_pp, b.mean_change_pp) || (std::isnan(a.mean_change_pp) && std::isnan(b.mean_change_pp)));
    EXPECT_TRUE(same_bits(a.std_change_pp, b.std_change_pp) || (std::isnan(a.std_change_pp) && std::isnan(b.std_change_pp)));
    EXPECT_EQ(a.n, b.n);
  }
  EXPECT_EQ(emit_report(parsed, ReportFormat::csv), csv);
}

TEST(Report, RawCellsRebuildTheReport) {
  const auto report = run_experiment({small_synthetic()}, {ClassifierFamily::LR, ClassifierFamily::KNN},
                                     {ImputerMethod::knn, ImputerMethod::mice}, {kSingleFeature, 0.4}, quick_settings());
  const auto rebuilt = parse_raw_cells(emit_raw_cells(report));
  EXPECT_EQ(emit_raw_cells(rebuilt), emit_raw_cells(report));
  ExperimentReport with_snapshot = rebuilt;
  with_snapshot.config_snapshot = report.config_snapshot;
  EXPECT_EQ(emit_report(with_snapshot, ReportFormat::csv), emit_report(report, ReportFormat::csv));
  EXPECT_EQ(rebuilt.full_accuracy, report.full_accuracy);
}

TEST(Report, MalformedCsvIsRejected) {
  EXPECT_THROW(parse_report_csv("a,b\n"), ParseError);
  EXPECT_THROW(parse_report_csv("dataset,classifier,imputer,fraction,mean_change_pp,std_change_pp,n\nd,SVM,knn,0.1,0,0,1\n"),
               ParseError);
  EXPECT_THROW(parse_report_csv("dataset,classifier,imputer,fraction,mean_change_pp,std_change_pp,n\nd,LR,knn,0.1,x,0,1\n"),
               ParseError);
}

// --- configuration ---------------------------------------------------------------------------

TEST(Config, ParsesTheDocumentedGrammar) {
  const auto c = parse_run_config(
      "# comment\n"
      "dataset = synthetic:4000,7,3\n"
      "dataset = csv:data/cancer.csv,label=class\n"
      "methods = knn, mice\n"
      "classifiers = lr, XGBT\n"
      "fractions = single, 0.25\n"
      "n_masks = 4\n"
      "seed = 18446744073709551615\n"
      "search_trials = 3\n"
      "output_dir = out/run1\n");
  ASSERT_EQ(c.datasets.size(), 2u);
  EXPECT_EQ(c.datasets[0].n_informative, 7u);
  EXPECT_EQ(c.datasets[1].label_column, "class");
  EXPECT_EQ(c.methods, (std::vector<ImputerMethod>{ImputerMethod::knn, ImputerMethod::mice}));
  EXPECT_EQ(c.classifiers, (std::vector<ClassifierFamily>{ClassifierFamily::LR, ClassifierFamily::GBT}));
  EXPECT_EQ(c.fractions, (std::vector<double>{kSingleFeature, 0.25}));
  EXPECT_EQ(c.n_masks, 4u);
  EXPECT_EQ(c.seed, 18446744073709551615ull);
  EXPECT_EQ(c.search_trials, 3u);
  EXPECT_EQ(c.output_dir, "out/run1");
}

TEST(Config, DefaultsUseTheDocumentedSeed) {
  const auto c = parse_run_config("dataset = synthetic:100,2,0\n");
  EXPECT_EQ(c.seed, kDefaultSeed);
  EXPECT_EQ(c.methods.size(), 8u);
  EXPECT_EQ(c.classifiers.size(), 6u);
}

TEST(Config, ValidationReportsEveryProblemAtOnce) {
  try {
    parse_run_config(
        "methods = knn, magic, linreg-li\n"
        "classifiers = LR, SVM\n"
        "fractions = 0.1, 0.7\n"
        "n_masks = 0\n"
        "colour = blue\n"
        "this line has no equals sign\n"
        "dataset = synthetic:10,0,0\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const auto& p = e.problems();
    EXPECT_EQ(p.size(), 7u);
    const std::string all = e.what();
    for (const char* needle : {"magic", "SVM", "0.7", "n_masks", "colour", "line 6", "informative"}) {
      EXPECT_NE(all.find(needle), std::string::npos) << needle << "\n" << all;
    }
  }
  EXPECT_THROW(parse_run_config(""), ConfigError);
  EXPECT_THROW(parse_run_config("dataset = synthetic:100,2,0\nseed = 1\nseed = 2\n"), ConfigError);
  EXPECT_THROW(parse_run_config("dataset = synthetic:100,2,0\nfractions = 0.1,0.1\n"), ConfigError);
  EXPECT_THROW(parse_run_config("dataset = csv:x.csv,merge=bogus\n"), ConfigError);
}

TEST(Config, SnapshotParsesBackToTheSameConfig) {
  const auto c = parse_run_config(
      "dataset = csv:a.csv,label=y,merge=threshold:6\n"
      "dataset = synthetic:50,3,1\n"
      "fractions = 0.1,single\n"
      "methods = xgb-iter\n");
  const std::string text = format_snapshot(config_snapshot(c));
  const auto again = parse_run_config(text);
  EXPECT_EQ(format_snapshot(config_snapshot(again)), text);
  EXPECT_EQ(again.datasets[0].merge, std::optional<std::string>("threshold:6"));
}

TEST(Config, ScalarFlagsOverrideTheFile) {
  std::vector<std::string> problems;
  auto entries = ConfigEntries::parse("dataset = synthetic:100,2,0\nseed = 5\n", problems);
  entries.set("seed", "9");
  EXPECT_EQ(build_run_config(entries, problems).seed, 9u);
}

}  // namespace
}  // namespace featrec

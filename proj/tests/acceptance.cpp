// Acceptance gate. Prints one PASS/FAIL line per criterion and exits with
// the number of failures. Usage: acceptance [criterion ...]; no argument
// runs all twelve.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cli_app.hpp"
#include "featrec/config.hpp"
#include "featrec/correlation.hpp"
#include "featrec/entropy.hpp"
#include "featrec/harness.hpp"
#include "featrec/imputer.hpp"
#include "featrec/ordering.hpp"
#include "featrec/report.hpp"
#include "test_util.hpp"

namespace featrec::acceptance {
namespace {

using testing::gaussian_samples;
using testing::make_dataset;

// --- pinned tolerances and budgets ---------------------------------------------

constexpr double kOlsTolerance = 1e-8;
constexpr double kMaximizationTolerance = 1e-4;
constexpr double kEntropy1dTolerance = 0.05;
constexpr double kEntropy2dTolerance = 0.08;
constexpr double kConditionalEntropyTolerance = 0.1;
constexpr double kMiceRidgeTolerance = 1e-8;
constexpr double kStrongClassifierFloor = 0.96;
constexpr double kLogisticLow = 0.78, kLogisticHigh = 0.89;
constexpr double kCancerLogisticTarget = 0.966, kCancerLogisticBand = 0.02;
constexpr double kCancerLinregTarget = -0.16, kCancerLinregBand = 0.6;
constexpr double kCancerChangeBound = 1.2;
constexpr double kTrendMlpCeiling = -2.0;
constexpr std::size_t kTrendMasks = 10;

// Randomized-search budgets; the trend grid uses the smaller one.
constexpr std::size_t kSearchTrials = 20;
constexpr std::size_t kTrendSearchTrials = 10;

struct Criterion {
  int id;
  double budget_seconds;
  std::function<bool(std::ostream&)> run;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

Dataset blank_masked(Dataset ds, const FeatureMask& mask) {
  for (auto j : mask.missing) ds.features.col(static_cast<Eigen::Index>(j)).setConstant(std::nan(""));
  return ds;
}

Dataset synthetic(const std::string& shape) {
  return load_dataset(parse_dataset_spec("synthetic:" + shape), kDefaultSeed);
}

// --- 1. closed-form linear imputability ---------------------------------------

Matrix three_feature_cov() {
  Matrix cov(3, 3);
  cov << 1, .5, .2, .5, 1, .3, .2, .3, 1;
  return cov;
}

// |corr(X_t, a X_1 + b X_2)| maximised over the direction (cos th, sin th)
// by a dense grid and golden-section refinement.
double direct_max_correlation(const Matrix& cov) {
  auto corr = [&](double th) {
    const double u = std::cos(th), v = std::sin(th);
    const double num = u * cov(0, 1) + v * cov(0, 2);
    const double var = u * u * cov(1, 1) + 2 * u * v * cov(1, 2) + v * v * cov(2, 2);
    return std::abs(num) / std::sqrt(cov(0, 0) * var);
  };
  const int steps = 20000;
  double best_th = 0.0, best = -1.0;
  for (int s = 0; s < steps; ++s) {
    const double th = std::numbers::pi * s / steps;
    if (corr(th) > best) best = corr(th), best_th = th;
  }
  double lo = best_th - std::numbers::pi / steps, hi = best_th + std::numbers::pi / steps;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    if (corr(m1) < corr(m2)) lo = m1; else hi = m2;
  }
  return std::max(best, corr(0.5 * (lo + hi)));
}

double ols_r_squared(const Matrix& x, const Vector& y) {
  Matrix design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  const Vector beta = design.householderQr().solve(y);
  const double rss = (y - design * beta).squaredNorm();
  const double tss = (y.array() - y.mean()).square().sum();
  return 1.0 - rss / tss;
}

bool linear_imputability(std::ostream& note) {
  const Matrix samples = gaussian_samples(three_feature_cov(), 3000, 77);
  const auto sample_fit = multiple_correlation(covariance(samples), 0, {1, 2});
  const double ols_gap = std::abs(sample_fit.rho_squared - ols_r_squared(samples.rightCols(2), samples.col(0)));

  CovarianceSummary exact;
  exact.cov = three_feature_cov();
  exact.mean = Vector::Zero(3);
  exact.n_samples = 1000;
  const double max_gap = std::abs(multiple_correlation(exact, 0, {1, 2}).rho - direct_max_correlation(exact.cov));
  note << "|rho2 - OLS R2| = " << ols_gap << ", |rho - direct max| = " << max_gap;
  return ols_gap <= kOlsTolerance && max_gap <= kMaximizationTolerance;
}

// --- 2. ordering oracle ---------------------------------------------------------

Matrix five_feature_cov() {
  Matrix a(5, 5);
  a << 1.0, 0.0, 0.0, 0.0, 0.0,
       0.9, 0.4, 0.0, 0.0, 0.0,
       0.3, 0.5, 0.8, 0.0, 0.0,
      -0.6, 0.2, 0.1, 0.7, 0.0,
       0.1, -0.7, 0.4, 0.3, 0.5;
  return a * a.transpose();
}

Matrix loop_covariance(const Matrix& x) {
  const auto n = x.rows(), p = x.cols();
  Vector mean = Vector::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i) mean += x.row(i).transpose();
  mean /= static_cast<double>(n);
  Matrix c = Matrix::Zero(p, p);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < p; ++b) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += (x(i, a) - mean(a)) * (x(i, b) - mean(b));
      c(a, b) = s / static_cast<double>(n - 1);
    }
  return c;
}

double brute_rho2(const Matrix& cov, std::size_t t, const IndexList& known) {
  const auto m = static_cast<Eigen::Index>(known.size());
  Matrix s(m, m);
  Vector c(m);
  const auto ti = static_cast<Eigen::Index>(t);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto ka = static_cast<Eigen::Index>(known[static_cast<std::size_t>(a)]);
    c(a) = cov(ti, ka);
    for (Eigen::Index b = 0; b < m; ++b) s(a, b) = cov(ka, static_cast<Eigen::Index>(known[static_cast<std::size_t>(b)]));
  }
  return c.dot(s.fullPivLu().solve(c)) / cov(ti, ti);
}

IndexList brute_greedy(const Matrix& cov, const IndexList& missing, bool recalc) {
  IndexList known;
  for (std::size_t j = 0; j < static_cast<std::size_t>(cov.rows()); ++j)
    if (std::find(missing.begin(), missing.end(), j) == missing.end()) known.push_back(j);
  const IndexList original_known = known;
  IndexList left = missing, order;
  while (!left.empty()) {
    std::size_t best = left[0];
    double best_score = -1.0;
    for (auto j : left) {
      const double s = brute_rho2(cov, j, recalc ? known : original_known);
      if (s > best_score) best_score = s, best = j;
    }
    order.push_back(best);
    left.erase(std::find(left.begin(), left.end(), best));
    known.push_back(best);
  }
  return order;
}

bool ordering_oracle(std::ostream& note) {
  const Dataset ds = make_dataset(gaussian_samples(five_feature_cov(), 3000, 4), Labels(3000, 0));
  const Matrix cov = loop_covariance(ds.features);
  std::size_t checked = 0, mismatched = 0;
  for (unsigned bits = 1; bits < (1u << 5); ++bits) {
    IndexList missing;
    for (std::size_t j = 0; j < 5; ++j)
      if (bits & (1u << j)) missing.push_back(j);
    if (missing.size() > 3) continue;
    for (bool recalc : {false, true}) {
      const auto order = order_by_linear_imputability(ds, make_mask(missing, 5), recalc);
      if (order.ordered_indices != brute_greedy(cov, missing, recalc)) ++mismatched;
      ++checked;
    }
  }
  note << checked << " orderings, " << mismatched << " mismatches";
  return checked == 50 && mismatched == 0;
}

// --- 3. entropy estimator ------------------------------------------------------

double gaussian_entropy(const Matrix& cov) {
  const double d = static_cast<double>(cov.rows());
  return 0.5 * (d * std::log(2 * std::numbers::pi * std::numbers::e) + std::log(cov.determinant()));
}

bool entropy_estimator(std::ostream& note) {
  const double h1 = kl_entropy(gaussian_samples(Matrix::Identity(1, 1), 5000, 1), 5).value;
  const double e1 = std::abs(h1 - 1.41894);

  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 1;
  diag(1, 1) = 4;
  const double e2 = std::abs(kl_entropy(gaussian_samples(diag, 5000, 2), 5).value - gaussian_entropy(diag));

  const double r = 0.9;
  Matrix corr(2, 2);
  corr << 1, r, r, 1;
  const double analytic = 0.5 * std::log(2 * std::numbers::pi * std::numbers::e * (1 - r * r));
  const double e3 = std::abs(conditional_entropy(gaussian_samples(corr, 5000, 10), 0, {1}).value - analytic);
  note << "errors 1-D " << fmt(e1) << ", 2-D " << fmt(e2) << ", conditional " << fmt(e3);
  return e1 <= kEntropy1dTolerance && e2 <= kEntropy2dTolerance && e3 <= kConditionalEntropyTolerance;
}

// --- 4. MICE contracts -----------------------------------------------------------

bool mice_contracts(std::ostream& note) {
  const SplitPair parts = split(generate_synthetic(600, 7, 3, 31), 0.7, 5);
  const FeatureMask mask = make_mask({3, 7}, 10);
  const ImputerConfig config;
  const auto model = fit_imputer(ImputerMethod::mice, parts.train, mask, config, 7);
  const Dataset probe = blank_masked(parts.test, mask);
  const auto draws = impute_mice_draws(model, probe);
  const Dataset pooled = impute(model, probe, mask);
  std::size_t unequal = 0;
  for (Eigen::Index i = 0; i < probe.features.rows(); ++i) {
    for (std::size_t m = 0; m < mask.missing.size(); ++m) {
      double sum = 0.0;
      for (const auto& d : draws) sum += d(i, static_cast<Eigen::Index>(m));
      if (!bit_equal(pooled.features(i, static_cast<Eigen::Index>(mask.missing[m])), sum / static_cast<double>(draws.size()))) {
        ++unequal;
      }
    }
  }

  const FeatureMask single = make_mask({4}, 10);
  auto frozen = fit_imputer(ImputerMethod::mice, parts.train, single, config, 8);
  auto& step = std::get<MiceState>(frozen.state).steps.at(0);
  step.posterior.coef_cov.setZero();
  step.posterior.noise_variance = 0.0;
  const Dataset out = impute(frozen, blank_masked(parts.test, single), single);
  const Matrix z = frozen.standardization.apply(parts.test.features);
  const Vector mean_z = step.posterior.predict_mean(select_cols(z, step.inputs));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    worst = std::max(worst, std::abs(out.features(i, 4) - frozen.standardization.invert(mean_z(i), 4)));
  }
  note << draws.size() << " draws, " << unequal << " pooled values differ from the draw mean; "
       << "zero-variance gap " << worst;
  return draws.size() == 150 && unequal == 0 && worst <= kMiceRidgeTolerance;
}

// --- 5. k-NN hand case -----------------------------------------------------------

bool knn_hand_case(std::ostream& note) {
  Matrix train(3, 2);
  train << 1, 10, -3, 20, 50, 99;
  Matrix test(1, 2);
  test << 0, std::nan("");
  ImputerConfig config;
  config.knn_k = 2;
  config.standardize = false;
  const FeatureMask mask = make_mask({1}, 2);
  const auto model = fit_imputer(ImputerMethod::knn, make_dataset(train, {0, 1, 0}), mask, config, 1);
  const double weighted = impute(model, make_dataset(test, {0}), mask).features(0, 1);

  Matrix exact(1, 2);
  exact << -3, std::nan("");
  const double reproduced = impute(model, make_dataset(exact, {0}), mask).features(0, 1);
  note << "distances 1 and 3 give " << weighted << ", zero-distance donor gives " << reproduced;
  return weighted == 12.5 && reproduced == 20.0;
}

// --- 6. pass-through and totality ---------------------------------------------

bool pass_through(std::ostream& note) {
  const Dataset ds = synthetic("4000,7,3");
  const SplitPair parts = split(ds, kTrainFraction, derive_seed(kDefaultSeed, ds.source_tag, "split"));
  // Small fixed hyper-parameters, no search.
  ImputerConfig config;
  config.mlp = MlpParams{{16}, Activation::tanh, 1e-2, 20, 64, 1e-4};
  config.gbt = GbtParams{20, 3, 0.2, 1.0, 1.0};
  config.mice_draws = 20;
  const auto masks = make_masks(10, {0.1, 0.2, 0.3, 0.4, 0.5}, 2, 12);
  std::size_t runs = 0, moved = 0, missing = 0;
  for (auto method : kImputerMethods) {
    for (const auto& mask : masks) {
      const auto model = fit_imputer(method, parts.train, mask, config, 13);
      const Dataset source = method == ImputerMethod::identity ? parts.test : blank_masked(parts.test, mask);
      const Dataset out = impute(model, source, mask);
      ++runs;
      if (!out.features.allFinite()) ++missing;
      for (auto j : mask.known(10)) {
        const auto c = static_cast<Eigen::Index>(j);
        for (Eigen::Index i = 0; i < out.features.rows(); ++i) {
          if (!bit_equal(out.features(i, c), parts.test.features(i, c))) {
            ++moved;
            break;
          }
        }
      }
    }
  }
  note << runs << " imputations, " << moved << " altered known columns, " << missing << " outputs with gaps";
  return runs == kImputerMethods.size() * 10 && moved == 0 && missing == 0;
}

// --- 7-10. desk-scale grids ----------------------------------------------------

ExperimentSettings grid_settings(std::size_t search_trials) {
  ExperimentSettings s;
  s.search_trials = search_trials;
  s.n_masks = kTrendMasks;
  return s;
}

double full_accuracy(const ExperimentReport& r, const std::string& dataset, ClassifierFamily f) {
  return r.full_accuracy.at({dataset, f});
}

bool synthetic_accuracy(std::ostream& note) {
  const Dataset ds = synthetic("4000,7,3");
  const auto report = run_experiment({ds}, {ClassifierFamily::LR, ClassifierFamily::MLP, ClassifierFamily::GBT},
                                     {ImputerMethod::identity}, {kSingleFeature}, grid_settings(kSearchTrials));
  const double lr = full_accuracy(report, ds.source_tag, ClassifierFamily::LR);
  const double mlp = full_accuracy(report, ds.source_tag, ClassifierFamily::MLP);
  const double gbt = full_accuracy(report, ds.source_tag, ClassifierFamily::GBT);
  note << ds.source_tag << " MLP " << fmt(mlp, 3) << ", GBT " << fmt(gbt, 3) << ", LR " << fmt(lr, 3);
  return mlp >= kStrongClassifierFloor && gbt >= kStrongClassifierFloor && lr >= kLogisticLow && lr <= kLogisticHigh;
}

Dataset cancer() { return load_csv(FEATREC_TEST_DATA_DIR "/cancer.csv", "class"); }

bool cancer_accuracy(std::ostream& note) {
  const Dataset ds = cancer();
  const auto report = run_experiment({ds}, {ClassifierFamily::LR}, {ImputerMethod::identity}, {kSingleFeature},
                                     grid_settings(kSearchTrials));
  const double lr = full_accuracy(report, ds.source_tag, ClassifierFamily::LR);
  note << ds.features.rows() << " rows, LR " << fmt(lr, 3);
  return ds.features.rows() == 699 && std::abs(lr - kCancerLogisticTarget) <= kCancerLogisticBand;
}

bool cancer_changes(std::ostream& note) {
  const Dataset ds = cancer();
  const std::vector<ClassifierFamily> families{kClassifierFamilies.begin(), kClassifierFamilies.end()};
  const std::vector<ImputerMethod> methods{kImputerMethods.begin(), kImputerMethods.end()};
  const auto report = run_experiment({ds}, families, methods, {kSingleFeature}, grid_settings(kSearchTrials));
  const auto& linreg = report.aggregates.at({ds.source_tag, ClassifierFamily::LR, ImputerMethod::linreg_li, kSingleFeature});
  double worst = 0.0;
  bool complete = report.n_failed() == 0;
  for (const auto& [key, agg] : report.aggregates) {
    if (agg.failed()) complete = false;
    else worst = std::max(worst, std::abs(agg.mean_change_pp));
  }
  note << "linreg-li/LR " << fmt(linreg.mean_change_pp, 2) << " pp, largest |mean change| " << fmt(worst, 2) << " pp, "
       << report.n_failed() << " failed cells";
  return complete && std::abs(linreg.mean_change_pp - kCancerLinregTarget) <= kCancerLinregBand && worst <= kCancerChangeBound;
}

bool degradation_trend(std::ostream& note) {
  const Dataset ds = synthetic("4000,14,6");
  const std::vector<ImputerMethod> methods{kImputerMethods.begin(), kImputerMethods.end()};
  const auto report = run_experiment({ds}, {ClassifierFamily::MLP}, methods, {0.1, 0.5}, grid_settings(kTrendSearchTrials));
  bool ok = report.n_failed() == 0;
  double sum50 = 0.0;
  std::vector<std::string> violations;
  for (auto m : methods) {
    const auto& a10 = report.aggregates.at({ds.source_tag, ClassifierFamily::MLP, m, 0.1});
    const auto& a50 = report.aggregates.at({ds.source_tag, ClassifierFamily::MLP, m, 0.5});
    if (a10.failed() || a50.failed() || a10.n < kTrendMasks || a50.n < kTrendMasks) {
      ok = false;
      continue;
    }
    if (!(a50.mean_change_pp <= a10.mean_change_pp)) violations.push_back(to_string(m));
    sum50 += a50.mean_change_pp;
  }
  const double mean50 = sum50 / static_cast<double>(methods.size());
  note << "all-imputer mean at 50% " << fmt(mean50, 2) << " pp, trend violations: "
       << (violations.empty() ? std::string("none") : "");
  for (std::size_t i = 0; i < violations.size(); ++i) note << (i ? "," : "") << violations[i];
  return ok && violations.empty() && mean50 <= kTrendMlpCeiling;
}

// --- 11. zero-mask identity ------------------------------------------------------

bool zero_mask(std::ostream& note) {
  const Dataset ds = synthetic("600,5,3");
  const SplitPair parts = split(ds, kTrainFraction, 1);
  ClassifierConfig cc;
  cc.search_trials = 2;
  // Cells take already-tuned imputer parameters.
  ImputerConfig ic;
  ic.mlp = MlpParams{{16}, Activation::tanh, 1e-2, 20, 64, 1e-4};
  ic.gbt = GbtParams{20, 3, 0.2, 1.0, 1.0};
  const std::vector<ClassifierFamily> families{kClassifierFamilies.begin(), kClassifierFamilies.end()};
  std::vector<detail::FittedClassifier> fitted(families.size());
  for (std::size_t c = 0; c < families.size(); ++c) {
    fitted[c].model = fit_classifier(families[c], parts.train, cc, 5);
    fitted[c].accuracy_full = accuracy(parts.test.labels, predict(*fitted[c].model, parts.test.features));
  }
  std::size_t cells = 0, nonzero = 0;
  for (auto m : kImputerMethods) {
    for (const auto& r : evaluate_cell(ds.source_tag, parts, families, fitted, m, 0.1, 0, FeatureMask{}, ic, 7)) {
      ++cells;
      if (r.failed || r.change_pp != 0.0) {
        if (nonzero++ == 0) note << "first offender " << to_string(m) << "/" << to_string(r.classifier) << " " << r.error << "; ";
      }
    }
  }
  note << cells << " cells, " << nonzero << " with nonzero or failed change";
  return cells == kImputerMethods.size() * families.size() && nonzero == 0;
}

// --- 12. determinism -------------------------------------------------------------

bool determinism(std::ostream& note) {
  RunConfig config;
  config.datasets = {parse_dataset_spec("synthetic:400,5,3")};
  config.fractions = {0.2, 0.5};
  config.n_masks = 2;
  config.search_trials = 2;
  const auto root = testing::temp_dir("acceptance_determinism");
  std::string raw[2];
  std::ostringstream log;
  for (int run = 0; run < 2; ++run) {
    config.output_dir = (root / ("run" + std::to_string(run))).string();
    const int code = cli::cmd_experiment(config, 1, log, true);
    if (code != cli::kExitOk) {
      note << "run " << run << " exited with " << code;
      return false;
    }
    raw[run] = testing::read_text(std::filesystem::path(config.output_dir) / "raw_cells.csv");
  }
  note << raw[0].size() << " bytes, " << (raw[0] == raw[1] ? "identical" : "different");
  return !raw[0].empty() && raw[0] == raw[1];
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, 1, linear_imputability}, {2, 1, ordering_oracle},     {3, 10, entropy_estimator},
      {4, 60, mice_contracts},     {5, 1, knn_hand_case},       {6, 300, pass_through},
      {7, 300, synthetic_accuracy}, {8, 60, cancer_accuracy},   {9, 300, cancer_changes},
      {10, 900, degradation_trend}, {11, 60, zero_mask},        {12, 120, determinism},
  };
  return all;
}

}  // namespace
}  // namespace featrec::acceptance

int main(int argc, char** argv) {
  using namespace featrec::acceptance;
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    std::ostringstream note;
    bool pass = false;
    const auto start = std::chrono::steady_clock::now();
    try {
      pass = c.run(note);
    } catch (const std::exception& e) {
      note << "threw: " << e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.budget_seconds;
    if (!in_time) note << "; over the " << c.budget_seconds << " s budget";
    pass = pass && in_time;
    if (!pass) ++failures;
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << "  " << note.str() << "  ["
              << fmt(seconds, 2) << " s]" << std::endl;
  }
  return failures;
}

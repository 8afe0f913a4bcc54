#pragma once

// Randomized hyper-parameter search and the search spaces used by the
// imputers and classifiers.

#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "featrec/gbt.hpp"
#include "featrec/mlp.hpp"
#include "featrec/random_forest.hpp"
#include "featrec/simple_models.hpp"

namespace featrec {

enum class SearchGoal { minimize, maximize };

template <typename Params>
struct SearchResult {
  Params best;
  double best_score = 0.0;
  std::size_t best_trial = 0;
  std::vector<std::optional<double>> trial_scores;  // nullopt: trial failed
};

// Samples n_trials configurations, trial t drawing from
// Rng(derive_seed(seed, t)) so each trial is independent of the others.
// objective(params, trial_seed) returns the validation score or throws.
// Ties keep the earliest trial.
template <typename Params>
SearchResult<Params> randomized_search(
    const std::function<Params(Rng&)>& sample,
    const std::function<double(const Params&, std::uint64_t)>& objective, std::size_t n_trials,
    std::uint64_t seed, SearchGoal goal) {
  if (n_trials < 1) throw InvalidArgument("randomized_search: n_trials must be >= 1");
  SearchResult<Params> result;
  bool found = false;
  std::string last_error;
  for (std::size_t t = 0; t < n_trials; ++t) {
    Rng rng(derive_seed(seed, "trial", static_cast<std::uint64_t>(t)));
    Params params = sample(rng);
    std::optional<double> score;
    try {
      const double s = objective(params, derive_seed(seed, "trial-fit", static_cast<std::uint64_t>(t)));
      if (std::isfinite(s)) score = s;
      else last_error = "non-finite score";
    } catch (const std::exception& e) {
      last_error = e.what();
    }
    result.trial_scores.push_back(score);
    if (!score) continue;
    const bool better = !found || (goal == SearchGoal::minimize ? *score < result.best_score
                                                                : *score > result.best_score);
    if (better) {
      result.best = std::move(params);
      result.best_score = *score;
      result.best_trial = t;
      found = true;
    }
  }
  if (!found) throw Error("randomized_search: all " + std::to_string(n_trials) +
                          " trials failed (last error: " + last_error + ")");
  return result;
}

// 80/20 hold-out over row indices, deterministic per seed.
struct Holdout {
  IndexList fit_rows;
  IndexList validation_rows;
};

inline Holdout holdout_split(std::size_t n, std::uint64_t seed, double fit_fraction = 0.8) {
  if (n < 2) throw InvalidArgument("holdout_split: need at least 2 rows");
  Rng rng(derive_seed(seed, "holdout"));
  IndexList rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  rng.shuffle(rows);
  auto cut = static_cast<std::size_t>(std::floor(fit_fraction * static_cast<double>(n) + 0.5));
  cut = std::clamp<std::size_t>(cut, 1, n - 1);
  Holdout h;
  h.fit_rows.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(cut));
  h.validation_rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(cut), rows.end());
  std::sort(h.fit_rows.begin(), h.fit_rows.end());
  std::sort(h.validation_rows.begin(), h.validation_rows.end());
  return h;
}

inline Matrix take_rows(const Matrix& m, const IndexList& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

inline Labels take_labels(const Labels& y, const IndexList& rows) {
  Labels out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

// --- search spaces -------------------------------------------------------------

inline MlpParams sample_mlp_params(Rng& rng) {
  static const std::vector<std::size_t> widths{16, 32, 64, 128};
  static const std::vector<std::size_t> epochs{50, 100, 200};
  MlpParams p;
  p.hidden.clear();
  const std::size_t layers = 1 + rng.below(2);
  for (std::size_t l = 0; l < layers; ++l) p.hidden.push_back(rng.pick(widths));
  p.activation = rng.below(2) == 0 ? Activation::relu : Activation::tanh;
  p.learning_rate = rng.log_uniform(1e-4, 1e-1);
  p.epochs = rng.pick(epochs);
  return p;
}

inline GbtParams sample_gbt_params(Rng& rng) {
  static const std::vector<std::size_t> depths{2, 3, 4, 6};
  static const std::vector<std::size_t> estimators{50, 100, 200, 400};
  GbtParams p;
  p.max_depth = rng.pick(depths);
  p.n_estimators = rng.pick(estimators);
  p.learning_rate = rng.log_uniform(0.01, 0.3);
  return p;
}

inline LogisticParams sample_logistic_params(Rng& rng) {
  LogisticParams p;
  p.penalty = rng.log_uniform(1e-4, 1e2);
  return p;
}

inline std::size_t sample_knn_k(Rng& rng) {
  static const std::vector<std::size_t> ks{1, 3, 5, 7, 11, 21};
  return rng.pick(ks);
}

inline RandomForestParams sample_forest_params(Rng& rng) {
  static const std::vector<std::size_t> trees{100, 300};
  static const std::vector<std::size_t> depths{0, 8, 16};
  RandomForestParams p;
  p.n_trees = rng.pick(trees);
  p.max_depth = rng.pick(depths);
  return p;
}

}  // namespace featrec

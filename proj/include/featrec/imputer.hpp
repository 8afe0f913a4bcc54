#pragma once

// Whole-feature imputers. Every imputer is fit on a complete training set
// for one FeatureMask and then fills those columns in any test set with
// the same schema. Models work on training-standardized features; known
// columns are copied through untouched and only masked columns are written.

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "featrec/bayesian_ridge.hpp"
#include "featrec/ordering.hpp"
#include "featrec/search.hpp"
#include "featrec/serialize.hpp"
#include "featrec/standardize.hpp"

namespace featrec {

enum class ImputerMethod { knn, linreg_li, linreg_iter, mice, mlp, mlp_li, xgb_li, xgb_iter, identity };

// The eight real methods in reporting order. `identity` is a diagnostic
// stand-in that returns the true test values and is not listed here.
inline constexpr std::array<ImputerMethod, 8> kImputerMethods{
    ImputerMethod::knn,    ImputerMethod::linreg_li, ImputerMethod::linreg_iter,
    ImputerMethod::mice,   ImputerMethod::mlp,       ImputerMethod::mlp_li,
    ImputerMethod::xgb_li, ImputerMethod::xgb_iter};

inline std::string to_string(ImputerMethod m) {
  switch (m) {
    case ImputerMethod::knn: return "knn";
    case ImputerMethod::linreg_li: return "linreg-li";
    case ImputerMethod::linreg_iter: return "linreg-iter";
    case ImputerMethod::mice: return "mice";
    case ImputerMethod::mlp: return "mlp";
    case ImputerMethod::mlp_li: return "mlp-li";
    case ImputerMethod::xgb_li: return "xgb-li";
    case ImputerMethod::xgb_iter: return "xgb-iter";
    case ImputerMethod::identity: return "identity";
  }
  return "?";
}

inline std::optional<ImputerMethod> parse_imputer_method(const std::string& s) {
  for (auto m : kImputerMethods) {
    if (to_string(m) == s) return m;
  }
  if (s == "identity") return ImputerMethod::identity;
  return std::nullopt;
}

inline ImputerMethod imputer_method_from_string(const std::string& s) {
  if (auto m = parse_imputer_method(s)) return *m;
  throw InvalidArgument("unknown imputer method '" + s + "'");
}

inline bool uses_mlp(ImputerMethod m) { return m == ImputerMethod::mlp || m == ImputerMethod::mlp_li; }
inline bool uses_gbt(ImputerMethod m) { return m == ImputerMethod::xgb_li || m == ImputerMethod::xgb_iter; }
inline bool needs_search(ImputerMethod m) { return uses_mlp(m) || uses_gbt(m); }

struct ImputerConfig {
  std::size_t knn_k = 5;
  std::size_t mice_draws = 150;
  std::size_t mice_burn_in = 10;
  std::size_t n_iter = 3;
  double iter_tol = 1e-6;
  std::size_t search_trials = 20;
  // Ranking used by the -li methods.
  OrderCriterion li_ordering = OrderCriterion::linear_imputability;
  std::size_t entropy_k = kDefaultEntropyK;
  bool standardize = true;
  // When set, used as-is instead of running the randomized search.
  std::optional<MlpParams> mlp;
  std::optional<GbtParams> gbt;
};

// --- fitted state ------------------------------------------------------------

using Regressor = std::variant<LinearFit, GbtModel, Mlp>;

inline Matrix predict_regressor(const Regressor& r, const Matrix& x) {
  return std::visit(
      [&](const auto& m) -> Matrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Mlp>) {
          return m.forward(x);
        } else {
          return m.predict(x);
        }
      },
      r);
}

// Predicts `targets` (one column each) from the `inputs` columns.
struct RegressionStep {
  IndexList targets;
  IndexList inputs;
  Regressor model;
};

struct KnnState {
  std::size_t k = 5;
  Matrix reference;  // standardized training rows, known columns only
  Matrix donors;     // raw training values of the masked columns
};

// Sequential prediction; each step's output is an input to later steps.
struct ChainState {
  std::vector<RegressionStep> steps;
};

// Phase one predicts from known columns only; phase two re-predicts every
// masked column from all other columns for up to n_iter rounds.
struct IterativeState {
  std::vector<RegressionStep> initial;
  std::vector<RegressionStep> refine;
  std::size_t n_iter = 3;
  double tol = 1e-6;
};

struct MiceStep {
  std::size_t target = 0;
  IndexList inputs;  // every other column
  BayesianRidgePosterior posterior;
};

struct MiceState {
  std::vector<MiceStep> steps;
  std::size_t draws = 150;
  std::size_t burn_in = 10;
};

struct IdentityState {};

using ImputerState = std::variant<KnnState, ChainState, IterativeState, MiceState, IdentityState>;

struct ImputerModel {
  ImputerMethod method = ImputerMethod::knn;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  FeatureMask mask;
  std::optional<ImputationOrder> order;
  StandardizationParams standardization;
  std::uint64_t seed = 0;
  std::optional<MlpParams> mlp_params;
  std::optional<GbtParams> gbt_params;
  ImputerState state;
};

// --- helpers -------------------------------------------------------------------

namespace detail {

inline IndexList merged(IndexList a, const IndexList& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  return a;
}

inline IndexList all_but(std::size_t p, std::size_t j) {
  IndexList out;
  for (std::size_t i = 0; i < p; ++i) {
    if (i != j) out.push_back(i);
  }
  return out;
}

inline StandardizationParams identity_standardization(std::size_t p) {
  return StandardizationParams{Vector::Zero(static_cast<Eigen::Index>(p)),
                               Vector::Ones(static_cast<Eigen::Index>(p))};
}

// Inverse-distance weighted mean, sum_i v_i / d_i over sum_i 1 / d_i,
// written with cofactor products prod_{j != i} d_j so that exact inputs
// give exact results. Distances are first scaled by a power of two, which
// is exact, to keep the products in range. Any zero distance switches to
// the plain mean of the exact-match donors.
inline double inverse_distance_mean(const std::vector<double>& dist, const std::vector<double>& values) {
  double zero_sum = 0.0;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] == 0.0) {
      zero_sum += values[i];
      ++zeros;
    }
  }
  if (zeros > 0) return zero_sum / static_cast<double>(zeros);
  int exponent = 0;
  std::frexp(*std::max_element(dist.begin(), dist.end()), &exponent);
  std::vector<double> scaled(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) scaled[i] = std::ldexp(dist[i], -exponent);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    double cofactor = 1.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
      if (j != i) cofactor *= scaled[j];
    }
    num += values[i] * cofactor;
    den += cofactor;
  }
  if (den > 0.0 && std::isfinite(num)) return num / den;
  // Products underflowed; fall back to the reciprocal form.
  num = den = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    num += values[i] / dist[i];
    den += 1.0 / dist[i];
  }
  return num / den;
}

struct FitContext {
  ImputerMethod method;
  const Matrix& z;  // standardized training features
  const FeatureMask& mask;
  const ImputerConfig& config;
  std::uint64_t seed;
};

inline Regressor fit_regressor(const FitContext& ctx, const IndexList& inputs,
                               const IndexList& targets) {
  const Matrix x = select_cols(ctx.z, inputs);
  if (uses_mlp(ctx.method)) {
    const Matrix y = select_cols(ctx.z, targets);
    return fit_mlp(x, y, *ctx.config.mlp, MlpOutput::linear,
                   derive_seed(ctx.seed, "mlp", static_cast<std::uint64_t>(targets.front())));
  }
  const Vector y = ctx.z.col(static_cast<Eigen::Index>(targets.front()));
  if (uses_gbt(ctx.method)) {
    return fit_gbt_regressor(x, y, *ctx.config.gbt);
  }
  return fit_ols(x, y);
}

inline ImputationOrder li_order(const FitContext& ctx, const Dataset& train, bool recalc) {
  if (ctx.config.li_ordering == OrderCriterion::information_imputability) {
    return order_by_information_imputability(train, ctx.mask, ctx.config.entropy_k,
                                             derive_seed(ctx.seed, "entropy"));
  }
  if (ctx.config.li_ordering == OrderCriterion::none) return natural_order(ctx.mask);
  return order_by_linear_imputability(train, ctx.mask, recalc);
}

inline void check_config(const ImputerConfig& c) {
  if (c.knn_k < 1) throw InvalidArgument("imputer config: knn_k must be >= 1");
  if (c.mice_draws < 1) throw InvalidArgument("imputer config: mice_draws must be >= 1");
  if (c.search_trials < 1) throw InvalidArgument("imputer config: search budget must be >= 1");
  if (c.iter_tol < 0.0) throw InvalidArgument("imputer config: iter_tol must be >= 0");
  if (c.entropy_k < 1) throw InvalidArgument("imputer config: entropy_k must be >= 1");
}

inline void check_fit_inputs(const Dataset& train, const FeatureMask& mask) {
  validate(train, false);
  for (auto j : mask.missing) {
    if (j >= train.n_features()) throw InvalidArgument("imputer: mask index out of range");
  }
  if (mask.missing.size() >= train.n_features()) {
    throw InvalidArgument("imputer: mask must leave at least one known feature");
  }
}

}  // namespace detail

// Fits with the hyper-parameters already present in `config`.
inline ImputerModel fit_imputer_fixed(ImputerMethod method, const Dataset& train,
                                      const FeatureMask& mask, const ImputerConfig& config,
                                      std::uint64_t seed) {
  detail::check_config(config);
  detail::check_fit_inputs(train, mask);
  if (uses_mlp(method) && !config.mlp) throw InvalidArgument("imputer: mlp parameters not set");
  if (uses_gbt(method) && !config.gbt) throw InvalidArgument("imputer: gbt parameters not set");

  const std::size_t p = train.n_features();
  ImputerModel model;
  model.method = method;
  model.n_features = p;
  model.feature_names = train.feature_names;
  model.mask = mask;
  model.seed = seed;
  model.standardization = config.standardize ? standardize_fit(train.features)
                                             : detail::identity_standardization(p);
  if (uses_mlp(method)) model.mlp_params = config.mlp;
  if (uses_gbt(method)) model.gbt_params = config.gbt;

  if (method == ImputerMethod::identity || mask.empty()) {
    model.state = IdentityState{};
    return model;
  }

  const Matrix z = model.standardization.apply(train.features);
  const IndexList known = mask.known(p);
  const detail::FitContext ctx{method, z, mask, config, seed};

  switch (method) {
    case ImputerMethod::knn: {
      KnnState st;
      st.k = config.knn_k;
      st.reference = select_cols(z, known);
      st.donors = select_cols(train.features, mask.missing);
      model.state = std::move(st);
      break;
    }
    case ImputerMethod::mlp: {
      ChainState st;
      st.steps.push_back({mask.missing, known, detail::fit_regressor(ctx, known, mask.missing)});
      model.state = std::move(st);
      break;
    }
    case ImputerMethod::linreg_li:
    case ImputerMethod::mlp_li:
    case ImputerMethod::xgb_li: {
      const bool recalc = method != ImputerMethod::linreg_li;
      model.order = detail::li_order(ctx, train, recalc);
      ChainState st;
      IndexList inputs = known;
      for (auto j : model.order->ordered_indices) {
        st.steps.push_back({{j}, inputs, detail::fit_regressor(ctx, inputs, {j})});
        inputs = detail::merged(inputs, {j});
      }
      model.state = std::move(st);
      break;
    }
    case ImputerMethod::linreg_iter:
    case ImputerMethod::xgb_iter: {
      model.order = order_by_linear_imputability(train, mask, method != ImputerMethod::linreg_iter);
      IterativeState st;
      st.n_iter = config.n_iter;
      st.tol = config.iter_tol;
      for (auto j : model.order->ordered_indices) {
        st.initial.push_back({{j}, known, detail::fit_regressor(ctx, known, {j})});
      }
      if (mask.missing.size() > 1) {
        for (auto j : model.order->ordered_indices) {
          const IndexList others = detail::all_but(p, j);
          st.refine.push_back({{j}, others, detail::fit_regressor(ctx, others, {j})});
        }
      }
      model.state = std::move(st);
      break;
    }
    case ImputerMethod::mice: {
      MiceState st;
      st.draws = config.mice_draws;
      st.burn_in = config.mice_burn_in;
      for (auto j : mask.missing) {
        MiceStep step;
        step.target = j;
        step.inputs = detail::all_but(p, j);
        step.posterior = fit_bayesian_ridge(select_cols(z, step.inputs), z.col(static_cast<Eigen::Index>(j)));
        st.steps.push_back(std::move(step));
      }
      model.state = std::move(st);
      break;
    }
    case ImputerMethod::identity:
      break;
  }
  return model;
}

// --- imputation ------------------------------------------------------------------

namespace detail {

inline void check_impute_inputs(const ImputerModel& model, const Dataset& test,
                                const FeatureMask& mask) {
  if (test.n_features() != model.n_features) {
    throw MaskMismatchError("imputer: test set has " + std::to_string(test.n_features()) +
                            " columns, model expects " + std::to_string(model.n_features));
  }
  if (mask.missing != model.mask.missing) {
    throw MaskMismatchError("imputer: declared missing columns do not match the model mask");
  }
  const IndexList known = mask.known(model.n_features);
  for (auto j : known) {
    if (!test.features.col(static_cast<Eigen::Index>(j)).allFinite()) {
      throw InvalidArgument("imputer: known column " + std::to_string(j) + " has non-finite values");
    }
  }
}

inline void run_steps(const std::vector<RegressionStep>& steps, Matrix& z, double* max_change) {
  for (const auto& step : steps) {
    const Matrix pred = predict_regressor(step.model, select_cols(z, step.inputs));
    for (std::size_t t = 0; t < step.targets.size(); ++t) {
      const auto col = static_cast<Eigen::Index>(step.targets[t]);
      if (max_change) {
        *max_change = std::max(*max_change, (pred.col(static_cast<Eigen::Index>(t)) - z.col(col)).cwiseAbs().maxCoeff());
      }
      z.col(col) = pred.col(static_cast<Eigen::Index>(t));
    }
  }
}

// Chained-equation draws in original units, one matrix per kept sweep with
// a column per masked feature. Each sweep visits the masked features in
// index order, draws coefficients from the posterior and adds predictive
// noise, so every sweep conditions on the latest values of the others.
inline std::vector<Matrix> mice_draws(const ImputerModel& model, const MiceState& st, Matrix z) {
  const Eigen::Index n = z.rows();
  for (auto j : model.mask.missing) z.col(static_cast<Eigen::Index>(j)).setZero();
  std::vector<Matrix> factors;
  for (const auto& step : st.steps) factors.push_back(step.posterior.cov_factor());

  Rng rng(derive_seed(model.seed, "mice-draws"));
  std::vector<Matrix> kept;
  const std::size_t sweeps = st.burn_in + st.draws;
  for (std::size_t s = 0; s < sweeps; ++s) {
    for (std::size_t f = 0; f < st.steps.size(); ++f) {
      const auto& step = st.steps[f];
      const auto& post = step.posterior;
      Vector u(post.coef_mean.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.normal();
      const Vector beta = post.coef_mean + factors[f] * u;
      const double y_mean = post.intercept + post.x_mean.dot(post.coef_mean);
      const Matrix x = select_cols(z, step.inputs);
      Vector pred = ((x.rowwise() - post.x_mean.transpose()) * beta).array() + y_mean;
      const double sd = std::sqrt(std::max(post.noise_variance, 0.0));
      for (Eigen::Index i = 0; i < n; ++i) pred(i) += sd * rng.normal();
      z.col(static_cast<Eigen::Index>(step.target)) = pred;
    }
    if (s >= st.burn_in) {
      Matrix draw(n, static_cast<Eigen::Index>(model.mask.missing.size()));
      for (std::size_t m = 0; m < model.mask.missing.size(); ++m) {
        const auto j = model.mask.missing[m];
        for (Eigen::Index i = 0; i < n; ++i) {
          draw(i, static_cast<Eigen::Index>(m)) = model.standardization.invert(z(i, static_cast<Eigen::Index>(j)), j);
        }
      }
      kept.push_back(std::move(draw));
    }
  }
  return kept;
}

// Mean pooling: running sum in draw order, then one division.
inline Matrix pool_mean(const std::vector<Matrix>& draws) {
  Matrix sum = Matrix::Zero(draws.front().rows(), draws.front().cols());
  for (const auto& d : draws) sum += d;
  return sum / static_cast<double>(draws.size());
}

}  // namespace detail

// Individual MICE draws (original units) for inspection; the pooled
// imputation is their mean.
inline std::vector<Matrix> impute_mice_draws(const ImputerModel& model, const Dataset& test) {
  detail::check_impute_inputs(model, test, model.mask);
  const auto* st = std::get_if<MiceState>(&model.state);
  if (!st) throw InvalidArgument("impute_mice_draws: model is not a mice imputer");
  return detail::mice_draws(model, *st, model.standardization.apply(test.features));
}

// Returns `test` with the masked columns filled. Values present in masked
// columns are ignored; the identity imputer returns them unchanged.
inline Dataset impute(const ImputerModel& model, const Dataset& test, const FeatureMask& mask) {
  detail::check_impute_inputs(model, test, mask);
  Dataset out = test;
  if (std::holds_alternative<IdentityState>(model.state)) return out;

  const Eigen::Index n = test.features.rows();
  const IndexList known = mask.known(model.n_features);
  auto write_back = [&](const Matrix& z) {
    for (auto j : mask.missing) {
      const auto col = static_cast<Eigen::Index>(j);
      for (Eigen::Index i = 0; i < n; ++i) out.features(i, col) = model.standardization.invert(z(i, col), j);
    }
  };

  Matrix z = model.standardization.apply(test.features);
  for (auto j : mask.missing) z.col(static_cast<Eigen::Index>(j)).setZero();

  if (const auto* st = std::get_if<KnnState>(&model.state)) {
    const Matrix query = select_cols(z, known);
    const std::size_t k = std::min<std::size_t>(st->k, static_cast<std::size_t>(st->reference.rows()));
    std::vector<double> dist(k), vals(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto nn = nearest_rows(st->reference, query.row(i), k);
      for (std::size_t d = 0; d < k; ++d) dist[d] = nn[d].first;
      for (std::size_t m = 0; m < mask.missing.size(); ++m) {
        for (std::size_t d = 0; d < k; ++d) {
          vals[d] = st->donors(static_cast<Eigen::Index>(nn[d].second), static_cast<Eigen::Index>(m));
        }
        out.features(i, static_cast<Eigen::Index>(mask.missing[m])) = detail::inverse_distance_mean(dist, vals);
      }
    }
  } else if (const auto* st = std::get_if<ChainState>(&model.state)) {
    detail::run_steps(st->steps, z, nullptr);
    write_back(z);
  } else if (const auto* st = std::get_if<IterativeState>(&model.state)) {
    detail::run_steps(st->initial, z, nullptr);
    for (std::size_t r = 0; r < st->n_iter && !st->refine.empty(); ++r) {
      double change = 0.0;
      detail::run_steps(st->refine, z, &change);
      if (change < st->tol) break;
    }
    write_back(z);
  } else if (const auto* st = std::get_if<MiceState>(&model.state)) {
    const Matrix pooled = detail::pool_mean(detail::mice_draws(model, *st, z));
    for (std::size_t m = 0; m < mask.missing.size(); ++m) {
      out.features.col(static_cast<Eigen::Index>(mask.missing[m])) = pooled.col(static_cast<Eigen::Index>(m));
    }
  }
  if (!out.features.allFinite()) throw Error("imputer " + to_string(model.method) + " produced non-finite values");
  return out;
}

inline Dataset impute(const ImputerModel& model, const Dataset& test) {
  return impute(model, test, model.mask);
}

// --- hyper-parameter search ----------------------------------------------------------

// RMSE over the masked cells, in training-standardized units.
inline double masked_rmse(const Matrix& truth, const Matrix& imputed, const FeatureMask& mask,
                          const StandardizationParams& scale) {
  double ss = 0.0;
  for (auto j : mask.missing) {
    const auto col = static_cast<Eigen::Index>(j);
    const double s = scale.stds(col);
    ss += ((imputed.col(col) - truth.col(col)) / s).squaredNorm();
  }
  return std::sqrt(ss / static_cast<double>(truth.rows() * static_cast<Eigen::Index>(mask.missing.size())));
}

// Fills config.mlp / config.gbt for methods that need them by randomized
// search, scoring each trial by validation RMSE of the whole imputer on an
// 80/20 split of the training rows. Parameters already set are kept.
inline ImputerConfig tune_imputer(ImputerMethod method, const Dataset& train, const FeatureMask& mask,
                                  ImputerConfig config, std::uint64_t seed) {
  detail::check_config(config);
  if (!needs_search(method) || mask.empty()) return config;
  if ((uses_mlp(method) && config.mlp) || (uses_gbt(method) && config.gbt)) return config;

  const Holdout h = holdout_split(train.n_rows(), derive_seed(seed, "imputer-holdout"));
  const Dataset fit = train.select_rows(h.fit_rows);
  const Dataset val = train.select_rows(h.validation_rows);
  const StandardizationParams scale = standardize_fit(train.features);

  auto score_with = [&](const ImputerConfig& trial_config, std::uint64_t trial_seed) {
    const ImputerModel m = fit_imputer_fixed(method, fit, mask, trial_config, trial_seed);
    return masked_rmse(val.features, impute(m, val).features, mask, scale);
  };

  const std::uint64_t search_seed = derive_seed(seed, "imputer-search");
  if (uses_mlp(method)) {
    std::function<MlpParams(Rng&)> sample = sample_mlp_params;
    std::function<double(const MlpParams&, std::uint64_t)> objective =
        [&](const MlpParams& p, std::uint64_t s) {
          ImputerConfig c = config;
          c.mlp = p;
          return score_with(c, s);
        };
    config.mlp = randomized_search(sample, objective, config.search_trials, search_seed, SearchGoal::minimize).best;
  } else {
    std::function<GbtParams(Rng&)> sample = sample_gbt_params;
    std::function<double(const GbtParams&, std::uint64_t)> objective =
        [&](const GbtParams& p, std::uint64_t s) {
          ImputerConfig c = config;
          c.gbt = p;
          return score_with(c, s);
        };
    config.gbt = randomized_search(sample, objective, config.search_trials, search_seed, SearchGoal::minimize).best;
  }
  return config;
}

// Searches hyper-parameters when the method needs them and none are
// given, then fits on the whole training set.
inline ImputerModel fit_imputer(ImputerMethod method, const Dataset& train, const FeatureMask& mask,
                                const ImputerConfig& config, std::uint64_t seed) {
  return fit_imputer_fixed(method, train, mask, tune_imputer(method, train, mask, config, seed), seed);
}

// --- serialization ---------------------------------------------------------------------

namespace io {

inline Json encode(const Regressor& r) {
  return std::visit(
      [](const auto& m) -> Json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearFit>) return Json{{"kind", "linear"}, {"model", encode(m)}};
        else if constexpr (std::is_same_v<T, GbtModel>) return Json{{"kind", "gbt"}, {"model", encode(m)}};
        else return Json{{"kind", "mlp"}, {"model", encode(m)}};
      },
      r);
}

inline Regressor decode_regressor(const Json& j) {
  const auto kind = at(j, "kind").get<std::string>();
  if (kind == "linear") return decode_linear(at(j, "model"));
  if (kind == "gbt") return decode_gbt(at(j, "model"));
  if (kind == "mlp") return decode_mlp(at(j, "model"));
  throw InvalidArgument("model document: unknown regressor kind '" + kind + "'");
}

inline Json encode(const std::vector<RegressionStep>& steps) {
  Json out = Json::array();
  for (const auto& s : steps) {
    out.push_back(Json{{"targets", encode(s.targets)}, {"inputs", encode(s.inputs)}, {"regressor", encode(s.model)}});
  }
  return out;
}

inline std::vector<RegressionStep> decode_steps(const Json& j, std::size_t p) {
  require(j.is_array(), "steps must be an array");
  std::vector<RegressionStep> out;
  for (const auto& s : j) {
    RegressionStep step{decode_indices(at(s, "targets")), decode_indices(at(s, "inputs")),
                        decode_regressor(at(s, "regressor"))};
    for (auto c : step.targets) require(c < p, "step target out of range");
    for (auto c : step.inputs) require(c < p, "step input out of range");
    if (const auto* g = std::get_if<GbtModel>(&step.model)) {
      for (const auto& t : g->trees) check_tree_features(t, step.inputs.size());
    } else if (const auto* l = std::get_if<LinearFit>(&step.model)) {
      require(static_cast<std::size_t>(l->coef.size()) == step.inputs.size(), "linear step width mismatch");
    } else if (const auto* n = std::get_if<Mlp>(&step.model)) {
      require(n->n_inputs() == step.inputs.size() && n->n_outputs() == step.targets.size(), "mlp step shape mismatch");
    }
    out.push_back(std::move(step));
  }
  return out;
}

inline Json encode(const ImputationOrder& o) {
  return Json{{"ordered_indices", encode(o.ordered_indices)},
              {"criterion", to_string(o.criterion)},
              {"recalculated", o.recalculated},
              {"scores", o.scores}};
}

inline ImputationOrder decode_order(const Json& j) {
  ImputationOrder o;
  o.ordered_indices = decode_indices(at(j, "ordered_indices"));
  o.criterion = order_criterion_from_string(at(j, "criterion").get<std::string>());
  o.recalculated = at(j, "recalculated").get<bool>();
  o.scores = at(j, "scores").get<std::vector<double>>();
  return o;
}

}  // namespace io

inline Json imputer_to_json(const ImputerModel& m) {
  using namespace io;
  Json doc = header("featrec-imputer");
  doc["method"] = to_string(m.method);
  doc["n_features"] = m.n_features;
  doc["feature_names"] = m.feature_names;
  doc["mask"] = Json{{"missing", encode(m.mask.missing)}, {"fraction", m.mask.fraction}};
  doc["order"] = m.order ? encode(*m.order) : Json(nullptr);
  doc["standardization"] = encode(m.standardization);
  doc["seed"] = m.seed;
  doc["mlp_params"] = m.mlp_params ? encode(*m.mlp_params) : Json(nullptr);
  doc["gbt_params"] = m.gbt_params ? encode(*m.gbt_params) : Json(nullptr);
  Json state;
  if (const auto* st = std::get_if<KnnState>(&m.state)) {
    state = Json{{"kind", "knn"}, {"k", st->k}, {"reference", encode(st->reference)}, {"donors", encode(st->donors)}};
  } else if (const auto* st = std::get_if<ChainState>(&m.state)) {
    state = Json{{"kind", "chain"}, {"steps", encode(st->steps)}};
  } else if (const auto* st = std::get_if<IterativeState>(&m.state)) {
    state = Json{{"kind", "iterative"}, {"initial", encode(st->initial)}, {"refine", encode(st->refine)},
                 {"n_iter", st->n_iter}, {"tol", st->tol}};
  } else if (const auto* st = std::get_if<MiceState>(&m.state)) {
    Json steps = Json::array();
    for (const auto& s : st->steps) {
      steps.push_back(Json{{"target", s.target},
                           {"inputs", encode(s.inputs)},
                           {"coef_mean", encode(s.posterior.coef_mean)},
                           {"coef_cov", encode(s.posterior.coef_cov)},
                           {"noise_variance", s.posterior.noise_variance},
                           {"intercept", s.posterior.intercept},
                           {"x_mean", encode(s.posterior.x_mean)}});
    }
    state = Json{{"kind", "mice"}, {"steps", std::move(steps)}, {"draws", st->draws}, {"burn_in", st->burn_in}};
  } else {
    state = Json{{"kind", "identity"}};
  }
  doc["state"] = std::move(state);
  return doc;
}

inline ImputerModel imputer_from_json(const Json& doc) {
  using namespace io;
  check_header(doc, "featrec-imputer");
  try {
    ImputerModel m;
    m.method = imputer_method_from_string(at(doc, "method").get<std::string>());
    m.n_features = at(doc, "n_features").get<std::size_t>();
    m.feature_names = at(doc, "feature_names").get<std::vector<std::string>>();
    require(m.feature_names.size() == m.n_features, "feature_names length mismatch");
    const Json& mask = at(doc, "mask");
    m.mask = make_mask(decode_indices(at(mask, "missing")), m.n_features, at(mask, "fraction").get<double>());
    if (!at(doc, "order").is_null()) m.order = decode_order(doc["order"]);
    m.standardization = decode_standardization(at(doc, "standardization"));
    require(m.standardization.size() == m.n_features, "standardization length mismatch");
    m.seed = decode_seed(at(doc, "seed"));
    if (!at(doc, "mlp_params").is_null()) m.mlp_params = decode_mlp_params(doc["mlp_params"]);
    if (!at(doc, "gbt_params").is_null()) m.gbt_params = decode_gbt_params(doc["gbt_params"]);
    const Json& st = at(doc, "state");
    const auto kind = at(st, "kind").get<std::string>();
    const std::size_t p = m.n_features;
    if (kind == "knn") {
      KnnState s;
      s.k = at(st, "k").get<std::size_t>();
      s.reference = decode_matrix(at(st, "reference"));
      s.donors = decode_matrix(at(st, "donors"));
      require(s.k >= 1 && s.reference.rows() == s.donors.rows() && s.reference.rows() > 0, "knn state shape");
      require(static_cast<std::size_t>(s.donors.cols()) == m.mask.missing.size(), "knn donor width");
      m.state = std::move(s);
    } else if (kind == "chain") {
      m.state = ChainState{decode_steps(at(st, "steps"), p)};
    } else if (kind == "iterative") {
      IterativeState s;
      s.initial = decode_steps(at(st, "initial"), p);
      s.refine = decode_steps(at(st, "refine"), p);
      s.n_iter = at(st, "n_iter").get<std::size_t>();
      s.tol = at(st, "tol").get<double>();
      m.state = std::move(s);
    } else if (kind == "mice") {
      MiceState s;
      s.draws = at(st, "draws").get<std::size_t>();
      s.burn_in = at(st, "burn_in").get<std::size_t>();
      require(s.draws >= 1, "mice draws must be >= 1");
      for (const auto& js : at(st, "steps")) {
        MiceStep step;
        step.target = at(js, "target").get<std::size_t>();
        step.inputs = decode_indices(at(js, "inputs"));
        step.posterior.coef_mean = decode_vector(at(js, "coef_mean"));
        step.posterior.coef_cov = decode_matrix(at(js, "coef_cov"));
        step.posterior.noise_variance = at(js, "noise_variance").get<double>();
        step.posterior.intercept = at(js, "intercept").get<double>();
        step.posterior.x_mean = decode_vector(at(js, "x_mean"));
        require(step.target < p, "mice target out of range");
        s.steps.push_back(std::move(step));
      }
      m.state = std::move(s);
    } else if (kind == "identity") {
      m.state = IdentityState{};
    } else {
      throw InvalidArgument("model document: unknown imputer state '" + kind + "'");
    }
    return m;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("model document: ") + e.what());
  }
}

inline void save_imputer(const ImputerModel& m, const std::string& path) {
  io::write_json_file(path, imputer_to_json(m));
}

inline ImputerModel load_imputer(const std::string& path) {
  return imputer_from_json(io::read_json_file(path));
}

}  // namespace featrec

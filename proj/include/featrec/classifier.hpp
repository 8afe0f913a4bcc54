#pragma once

// The six binary classifiers used to score imputations, fit with
// randomized hyper-parameter search on a validation split.

#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <variant>

#include "featrec/random_forest.hpp"
#include "featrec/search.hpp"
#include "featrec/serialize.hpp"
#include "featrec/standardize.hpp"

namespace featrec {

enum class ClassifierFamily { LR, MLP, KNN, NB, GBT, RF };

// Fixed family order; also the tie-break order for model selection.
inline constexpr std::array<ClassifierFamily, 6> kClassifierFamilies{
    ClassifierFamily::LR, ClassifierFamily::MLP, ClassifierFamily::KNN,
    ClassifierFamily::NB, ClassifierFamily::GBT, ClassifierFamily::RF};

inline std::string to_string(ClassifierFamily f) {
  switch (f) {
    case ClassifierFamily::LR: return "LR";
    case ClassifierFamily::MLP: return "MLP";
    case ClassifierFamily::KNN: return "KNN";
    case ClassifierFamily::NB: return "NB";
    case ClassifierFamily::GBT: return "GBT";
    case ClassifierFamily::RF: return "RF";
  }
  return "?";
}

// Case-insensitive; "XGBT" is accepted for GBT.
inline std::optional<ClassifierFamily> parse_classifier_family(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (s == "XGBT") return ClassifierFamily::GBT;
  for (auto f : kClassifierFamilies) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

inline ClassifierFamily classifier_family_from_string(const std::string& s) {
  if (auto f = parse_classifier_family(s)) return *f;
  throw InvalidArgument("unknown classifier family '" + s + "'");
}

inline std::size_t family_rank(ClassifierFamily f) {
  for (std::size_t i = 0; i < kClassifierFamilies.size(); ++i) {
    if (kClassifierFamilies[i] == f) return i;
  }
  return kClassifierFamilies.size();
}

struct ClassifierConfig {
  std::size_t search_trials = 20;
  // When set, used as-is instead of running the randomized search.
  std::optional<LogisticParams> logistic;
  std::optional<MlpParams> mlp;
  std::optional<std::size_t> knn_k;
  std::optional<GbtParams> gbt;
  std::optional<RandomForestParams> forest;
};

struct MlpClassifierModel {
  Mlp net;
  Labels predict(const Matrix& x) const {
    const Matrix prob = net.forward(x);
    Labels out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = prob(i, 0) > 0.5 ? 1 : 0;
    return out;
  }
};

struct GbtClassifierModel {
  GbtModel boosted;
  Labels predict(const Matrix& x) const { return gbt_predict_labels(boosted, x); }
};

using ClassifierState = std::variant<LogisticModel, MlpClassifierModel, KnnClassifierModel,
                                     NaiveBayesModel, GbtClassifierModel, RandomForestModel>;

struct ClassifierModel {
  ClassifierFamily family = ClassifierFamily::LR;
  std::size_t n_features = 0;
  // LR, MLP and KNN see standardized inputs; the others see raw values and
  // carry an identity transform.
  StandardizationParams standardization;
  Json hyper_params = Json::object();
  std::uint64_t seed = 0;
  bool converged = true;
  ClassifierState state;
};

inline bool standardizes_inputs(ClassifierFamily f) {
  return f == ClassifierFamily::LR || f == ClassifierFamily::MLP || f == ClassifierFamily::KNN;
}

inline Labels predict(const ClassifierModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.n_features) {
    throw InvalidArgument("predict: matrix has " + std::to_string(x.cols()) +
                          " columns, model expects " + std::to_string(model.n_features));
  }
  if (x.rows() == 0) return {};
  if (!x.allFinite()) throw InvalidArgument("predict: non-finite features");
  const Matrix z = standardizes_inputs(model.family) ? model.standardization.apply(x) : x;
  return std::visit([&](const auto& m) { return m.predict(z); }, model.state);
}

inline double accuracy(const Labels& truth, const Labels& predicted) {
  if (truth.size() != predicted.size()) throw InvalidArgument("accuracy: length mismatch");
  if (truth.empty()) throw InvalidArgument("accuracy: empty label vectors");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace detail {

struct ClassifierFit {
  ClassifierState state;
  Json hyper_params;
  bool converged = true;
};

inline Matrix label_column(const Labels& y) {
  Matrix out(static_cast<Eigen::Index>(y.size()), 1);
  for (std::size_t i = 0; i < y.size(); ++i) out(static_cast<Eigen::Index>(i), 0) = y[i];
  return out;
}

// Fits one family on (already transformed) features with fixed parameters.
template <typename Params>
ClassifierFit fit_family(const Matrix& x, const Labels& y, const Params& params,
                         std::uint64_t seed) {
  ClassifierFit fit;
  if constexpr (std::is_same_v<Params, LogisticParams>) {
    auto m = fit_logistic(x, y, params);
    fit.converged = m.converged;
    fit.hyper_params = Json{{"penalty", params.penalty}, {"max_iter", params.max_iter}, {"tol", params.tol}};
    fit.state = std::move(m);
  } else if constexpr (std::is_same_v<Params, MlpParams>) {
    fit.state = MlpClassifierModel{fit_mlp(x, label_column(y), params, MlpOutput::sigmoid, seed)};
    fit.hyper_params = io::encode(params);
  } else if constexpr (std::is_same_v<Params, std::size_t>) {
    fit.state = KnnClassifierModel{x, y, params};
    fit.hyper_params = Json{{"k", params}};
  } else if constexpr (std::is_same_v<Params, GbtParams>) {
    fit.state = GbtClassifierModel{fit_gbt_classifier(x, y, params)};
    fit.hyper_params = io::encode(params);
  } else if constexpr (std::is_same_v<Params, RandomForestParams>) {
    fit.state = fit_random_forest(x, y, params, seed);
    fit.hyper_params = Json{{"n_trees", params.n_trees}, {"max_depth", params.max_depth},
                            {"max_features", params.max_features}, {"bootstrap", params.bootstrap}};
  }
  return fit;
}

template <typename Params>
Params search_family(const Matrix& x, const Labels& y,
                     const std::function<Params(Rng&)>& sample, std::size_t trials, std::uint64_t seed) {
  const Holdout h = holdout_split(static_cast<std::size_t>(x.rows()), derive_seed(seed, "classifier-holdout"));
  const Matrix fx = take_rows(x, h.fit_rows);
  const Labels fy = take_labels(y, h.fit_rows);
  const Matrix vx = take_rows(x, h.validation_rows);
  const Labels vy = take_labels(y, h.validation_rows);
  if (!has_both_classes(fy)) throw InvalidArgument("classifier search: fit split lost a class");
  std::function<double(const Params&, std::uint64_t)> objective = [&](const Params& p, std::uint64_t s) {
    const ClassifierFit fit = fit_family(fx, fy, p, s);
    return accuracy(vy, std::visit([&](const auto& m) { return m.predict(vx); }, fit.state));
  };
  return randomized_search(sample, objective, trials, derive_seed(seed, "classifier-search"),
                           SearchGoal::maximize).best;
}

}  // namespace detail

inline ClassifierModel fit_classifier(ClassifierFamily family, const Dataset& train,
                                      const ClassifierConfig& config, std::uint64_t seed) {
  validate(train, true);
  if (config.search_trials < 1) throw InvalidArgument("classifier config: search budget must be >= 1");
  ClassifierModel model;
  model.family = family;
  model.n_features = train.n_features();
  model.seed = seed;
  model.standardization = standardizes_inputs(family)
                              ? standardize_fit(train.features)
                              : StandardizationParams{Vector::Zero(train.features.cols()),
                                                      Vector::Ones(train.features.cols())};
  const Matrix x = standardizes_inputs(family) ? model.standardization.apply(train.features) : train.features;
  const Labels& y = train.labels;
  const std::size_t trials = config.search_trials;

  auto finish = [&](detail::ClassifierFit fit) {
    model.state = std::move(fit.state);
    model.hyper_params = std::move(fit.hyper_params);
    model.converged = fit.converged;
    return model;
  };

  switch (family) {
    case ClassifierFamily::LR: {
      const LogisticParams p = config.logistic ? *config.logistic
          : detail::search_family<LogisticParams>(x, y, sample_logistic_params, trials, seed);
      return finish(detail::fit_family(x, y, p, seed));
    }
    case ClassifierFamily::MLP: {
      const MlpParams p = config.mlp ? *config.mlp
          : detail::search_family<MlpParams>(x, y, sample_mlp_params, trials, seed);
      return finish(detail::fit_family(x, y, p, derive_seed(seed, "mlp-final")));
    }
    case ClassifierFamily::KNN: {
      const std::size_t k = config.knn_k ? *config.knn_k
          : detail::search_family<std::size_t>(x, y, sample_knn_k, trials, seed);
      if (k < 1) throw InvalidArgument("classifier config: knn k must be >= 1");
      return finish(detail::fit_family(x, y, k, seed));
    }
    case ClassifierFamily::NB: {
      detail::ClassifierFit fit;
      fit.state = fit_naive_bayes(x, y);
      fit.hyper_params = Json{{"var_floor", kNaiveBayesVarFloor}};
      return finish(std::move(fit));
    }
    case ClassifierFamily::GBT: {
      const GbtParams p = config.gbt ? *config.gbt
          : detail::search_family<GbtParams>(x, y, sample_gbt_params, trials, seed);
      return finish(detail::fit_family(x, y, p, seed));
    }
    case ClassifierFamily::RF: {
      const RandomForestParams p = config.forest ? *config.forest
          : detail::search_family<RandomForestParams>(x, y, sample_forest_params, trials, seed);
      return finish(detail::fit_family(x, y, p, derive_seed(seed, "rf-final")));
    }
  }
  throw InvalidArgument("unknown classifier family");
}

// --- serialization ----------------------------------------------------------------

inline Json classifier_to_json(const ClassifierModel& m) {
  using namespace io;
  Json doc = header("featrec-classifier");
  doc["family"] = to_string(m.family);
  doc["n_features"] = m.n_features;
  doc["standardization"] = encode(m.standardization);
  doc["hyper_params"] = m.hyper_params;
  doc["seed"] = m.seed;
  doc["converged"] = m.converged;
  Json st;
  if (const auto* s = std::get_if<LogisticModel>(&m.state)) {
    st = Json{{"coef", encode(s->coef)}, {"intercept", s->intercept}};
  } else if (const auto* s = std::get_if<MlpClassifierModel>(&m.state)) {
    st = Json{{"net", encode(s->net)}};
  } else if (const auto* s = std::get_if<KnnClassifierModel>(&m.state)) {
    st = Json{{"k", s->k}, {"reference", encode(s->reference)}, {"labels", s->labels}};
  } else if (const auto* s = std::get_if<NaiveBayesModel>(&m.state)) {
    st = Json{{"log_prior", {s->log_prior[0], s->log_prior[1]}},
              {"means", encode(s->means)},
              {"variances", encode(s->variances)}};
  } else if (const auto* s = std::get_if<GbtClassifierModel>(&m.state)) {
    st = Json{{"boosted", encode(s->boosted)}};
  } else if (const auto* s = std::get_if<RandomForestModel>(&m.state)) {
    Json trees = Json::array();
    for (const auto& t : s->trees) trees.push_back(encode(t));
    st = Json{{"trees", std::move(trees)}};
  }
  doc["state"] = std::move(st);
  return doc;
}

inline ClassifierModel classifier_from_json(const Json& doc) {
  using namespace io;
  check_header(doc, "featrec-classifier");
  try {
    ClassifierModel m;
    m.family = classifier_family_from_string(at(doc, "family").get<std::string>());
    m.n_features = at(doc, "n_features").get<std::size_t>();
    m.standardization = decode_standardization(at(doc, "standardization"));
    require(m.standardization.size() == m.n_features, "standardization length mismatch");
    m.hyper_params = at(doc, "hyper_params");
    m.seed = decode_seed(at(doc, "seed"));
    m.converged = at(doc, "converged").get<bool>();
    const Json& st = at(doc, "state");
    const auto p = static_cast<Eigen::Index>(m.n_features);
    switch (m.family) {
      case ClassifierFamily::LR: {
        LogisticModel s;
        s.coef = decode_vector(at(st, "coef"));
        s.intercept = at(st, "intercept").get<double>();
        require(s.coef.size() == p, "logistic width mismatch");
        m.state = std::move(s);
        break;
      }
      case ClassifierFamily::MLP: {
        MlpClassifierModel s{decode_mlp(at(st, "net"))};
        require(static_cast<Eigen::Index>(s.net.n_inputs()) == p && s.net.n_outputs() == 1, "mlp shape mismatch");
        m.state = std::move(s);
        break;
      }
      case ClassifierFamily::KNN: {
        KnnClassifierModel s;
        s.k = at(st, "k").get<std::size_t>();
        s.reference = decode_matrix(at(st, "reference"));
        s.labels = at(st, "labels").get<Labels>();
        require(s.k >= 1 && s.reference.cols() == p &&
                    static_cast<std::size_t>(s.reference.rows()) == s.labels.size(), "knn shape mismatch");
        m.state = std::move(s);
        break;
      }
      case ClassifierFamily::NB: {
        NaiveBayesModel s;
        const Json& lp = at(st, "log_prior");
        require(lp.is_array() && lp.size() == 2, "log_prior must have 2 entries");
        s.log_prior[0] = lp[0].get<double>();
        s.log_prior[1] = lp[1].get<double>();
        s.means = decode_matrix(at(st, "means"));
        s.variances = decode_matrix(at(st, "variances"));
        require(s.means.rows() == 2 && s.means.cols() == p && s.variances.rows() == 2 && s.variances.cols() == p,
                "naive bayes shape mismatch");
        m.state = std::move(s);
        break;
      }
      case ClassifierFamily::GBT: {
        GbtClassifierModel s{decode_gbt(at(st, "boosted"))};
        for (const auto& t : s.boosted.trees) check_tree_features(t, m.n_features);
        m.state = std::move(s);
        break;
      }
      case ClassifierFamily::RF: {
        RandomForestModel s;
        for (const auto& t : at(st, "trees")) s.trees.push_back(decode_tree(t));
        require(!s.trees.empty(), "forest has no trees");
        for (const auto& t : s.trees) check_tree_features(t, m.n_features);
        m.state = std::move(s);
        break;
      }
    }
    return m;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("model document: ") + e.what());
  }
}

inline void save_classifier(const ClassifierModel& m, const std::string& path) {
  io::write_json_file(path, classifier_to_json(m));
}

inline ClassifierModel load_classifier(const std::string& path) {
  return classifier_from_json(io::read_json_file(path));
}

}  // namespace featrec

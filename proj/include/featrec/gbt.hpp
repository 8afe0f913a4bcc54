#pragma once

// Gradient-boosted regression trees: squared error for regression,
// logistic loss for binary classification. Newton leaf values with an L2
// penalty on leaf weights.

#include <cmath>
#include <string>
#include <vector>

#include "featrec/tree.hpp"

namespace featrec {

struct GbtParams {
  std::size_t n_estimators = 100;
  std::size_t max_depth = 3;
  double learning_rate = 0.1;
  double lambda = 1.0;
  double min_child_weight = 1.0;

  friend bool operator==(const GbtParams&, const GbtParams&) = default;
};

enum class GbtLoss { squared_error, logistic };

struct GbtModel {
  GbtLoss loss = GbtLoss::squared_error;
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<Tree> trees;

  // Raw additive score (margin for logistic loss).
  Vector decision(const Matrix& x) const {
    Vector out = Vector::Constant(x.rows(), base_score);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto row = x.row(i);
      double s = 0.0;
      for (const auto& t : trees) s += t.predict(row);
      out(i) += learning_rate * s;
    }
    return out;
  }

  Vector predict(const Matrix& x) const { return decision(x); }
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace detail {

inline GbtModel boost(const Matrix& x, const Vector& y, GbtLoss loss, const GbtParams& params,
                      const SortedColumns* presorted) {
  if (x.rows() != y.size()) throw InvalidArgument("gbt: row mismatch");
  if (x.rows() < 2) throw InvalidArgument("gbt: need at least 2 rows");
  if (params.n_estimators < 1) throw InvalidArgument("gbt: n_estimators must be >= 1");
  if (!(params.learning_rate > 0.0)) throw InvalidArgument("gbt: learning_rate must be > 0");
  SortedColumns local;
  if (!presorted) {
    local = SortedColumns(x);
    presorted = &local;
  }
  const auto n = static_cast<std::size_t>(x.rows());

  GbtModel model;
  model.loss = loss;
  model.learning_rate = params.learning_rate;
  if (loss == GbtLoss::squared_error) {
    model.base_score = y.mean();
  } else {
    const double prior = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
    model.base_score = std::log(prior / (1.0 - prior));
  }

  const GradientCriterion crit{params.lambda, params.min_child_weight};
  TreeGrowOptions grow;
  grow.max_depth = params.max_depth;
  const std::vector<char> in_bag(n, 1);
  std::vector<SplitStats> stats(n);
  Vector score = Vector::Constant(x.rows(), model.base_score);

  model.trees.reserve(params.n_estimators);
  for (std::size_t m = 0; m < params.n_estimators; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (loss == GbtLoss::squared_error) {
        stats[i] = SplitStats{score(ii) - y(ii), 1.0};
      } else {
        const double prob = sigmoid(score(ii));
        stats[i] = SplitStats{prob - y(ii), std::max(prob * (1.0 - prob), 1e-16)};
      }
    }
    Tree tree = grow_tree(x, *presorted, stats, in_bag, crit, grow);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      score(i) += params.learning_rate * tree.predict(x.row(i));
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace detail

inline GbtModel fit_gbt_regressor(const Matrix& x, const Vector& y, const GbtParams& params,
                                  const SortedColumns* presorted = nullptr) {
  return detail::boost(x, y, GbtLoss::squared_error, params, presorted);
}

inline GbtModel fit_gbt_classifier(const Matrix& x, const Labels& labels, const GbtParams& params,
                                   const SortedColumns* presorted = nullptr) {
  Vector y(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i)) = labels[i];
  return detail::boost(x, y, GbtLoss::logistic, params, presorted);
}

inline Labels gbt_predict_labels(const GbtModel& model, const Matrix& x) {
  const Vector margin = model.decision(x);
  Labels out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = margin(i) > 0.0;
  return out;
}

}  // namespace featrec

#pragma once

// Logistic regression, Gaussian naive Bayes and k-nearest-neighbour
// classification.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>
#include <utility>
#include <vector>

#include "featrec/gbt.hpp"
#include "featrec/linalg.hpp"

namespace featrec {

// --- logistic regression ----------------------------------------------------

struct LogisticParams {
  double penalty = 1.0;  // L2 strength on weights (intercept unpenalised)
  std::size_t max_iter = 100;
  double tol = 1e-8;

  friend bool operator==(const LogisticParams&, const LogisticParams&) = default;
};

struct LogisticModel {
  Vector coef;
  double intercept = 0.0;
  bool converged = true;

  Labels predict(const Matrix& x) const {
    const Vector margin = (x * coef).array() + intercept;
    Labels out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = margin(i) > 0.0;
    return out;
  }
};

// Penalised maximum likelihood by Newton ascent on the log-likelihood.
inline LogisticModel fit_logistic(const Matrix& x, const Labels& labels, const LogisticParams& params) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw InvalidArgument("logistic: row mismatch");
  }
  if (!(params.penalty > 0.0)) throw InvalidArgument("logistic: penalty must be > 0");
  const auto n = x.rows();
  const auto p = x.cols();
  Matrix design(n, p + 1);
  design.leftCols(p) = x;
  design.col(p).setOnes();
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)];

  Vector beta = Vector::Zero(p + 1);
  Vector pen = Vector::Constant(p + 1, params.penalty);
  pen(p) = 1e-10;

  auto objective = [&](const Vector& b) {
    const Vector z = design * b;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // log(1 + e^z) computed stably
      const double soft = z(i) > 0 ? z(i) + std::log1p(std::exp(-z(i))) : std::log1p(std::exp(z(i)));
      ll += y(i) * z(i) - soft;
    }
    return ll - 0.5 * (pen.array() * b.array().square()).sum();
  };

  LogisticModel model;
  model.converged = false;
  double current = objective(beta);
  for (std::size_t it = 0; it < params.max_iter; ++it) {
    const Vector z = design * beta;
    Vector prob(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = sigmoid(z(i));
      w(i) = std::max(prob(i) * (1.0 - prob(i)), 1e-12);
    }
    const Vector grad = design.transpose() * (y - prob) - pen.cwiseProduct(beta);
    Matrix hess = design.transpose() * w.asDiagonal() * design;
    hess.diagonal() += pen;
    hess = 0.5 * (hess + hess.transpose()).eval();
    const Vector step = solve_spd(hess, grad);
    // Backtracking keeps every step an ascent step.
    double t = 1.0;
    Vector candidate = beta + step;
    double value = objective(candidate);
    while (value < current && t > 1e-8) {
      t *= 0.5;
      candidate = beta + t * step;
      value = objective(candidate);
    }
    const double change = (candidate - beta).cwiseAbs().maxCoeff();
    beta = std::move(candidate);
    current = value;
    if (change < params.tol) {
      model.converged = true;
      break;
    }
  }
  model.coef = beta.head(p);
  model.intercept = beta(p);
  return model;
}

// --- Gaussian naive Bayes ----------------------------------------------------

inline constexpr double kNaiveBayesVarFloor = 1e-9;

struct NaiveBayesModel {
  double log_prior[2] = {0.0, 0.0};
  Matrix means;      // 2 x p
  Matrix variances;  // 2 x p

  Labels predict(const Matrix& x) const {
    Labels out(static_cast<std::size_t>(x.rows()));
    const auto p = x.cols();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double score[2];
      for (int c = 0; c < 2; ++c) {
        double s = log_prior[c];
        for (Eigen::Index j = 0; j < p; ++j) {
          const double v = variances(c, j);
          const double d = x(i, j) - means(c, j);
          s -= 0.5 * (std::log(2 * std::numbers::pi * v) + d * d / v);
        }
        score[c] = s;
      }
      out[static_cast<std::size_t>(i)] = score[1] > score[0] ? 1 : 0;
    }
    return out;
  }
};

inline NaiveBayesModel fit_naive_bayes(const Matrix& x, const Labels& labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw InvalidArgument("naive bayes: row mismatch");
  }
  NaiveBayesModel model;
  model.means = Matrix::Zero(2, x.cols());
  model.variances = Matrix::Zero(2, x.cols());
  double count[2] = {0.0, 0.0};
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    count[c] += 1.0;
    model.means.row(c) += x.row(i);
  }
  if (count[0] == 0.0 || count[1] == 0.0) throw InvalidArgument("naive bayes: single class");
  for (int c = 0; c < 2; ++c) model.means.row(c) /= count[c];
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    model.variances.row(c) += (x.row(i) - model.means.row(c)).array().square().matrix();
  }
  for (int c = 0; c < 2; ++c) {
    model.variances.row(c) = (model.variances.row(c) / count[c]).cwiseMax(kNaiveBayesVarFloor);
    model.log_prior[c] = std::log(count[c] / (count[0] + count[1]));
  }
  return model;
}

// --- nearest neighbours ------------------------------------------------------

// Indices and Euclidean distances of the k nearest reference rows to
// `query`, nearest first; equal distances keep the lower row index first.
template <typename Row>
std::vector<std::pair<double, std::size_t>> nearest_rows(const Matrix& reference, const Row& query,
                                                         std::size_t k) {
  const auto n = static_cast<std::size_t>(reference.rows());
  k = std::min(k, n);
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = {(reference.row(static_cast<Eigen::Index>(i)) - query).squaredNorm(), i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  dist.resize(k);
  for (auto& d : dist) d.first = std::sqrt(d.first);
  return dist;
}

struct KnnClassifierModel {
  Matrix reference;
  Labels labels;
  std::size_t k = 5;

  // Majority vote. Equal distances at the k-th place prefer the lower
  // label (then the lower row); a tied vote goes to class 0.
  Labels predict(const Matrix& x) const {
    Labels out(static_cast<std::size_t>(x.rows()));
    const auto n = static_cast<std::size_t>(reference.rows());
    const std::size_t kk = std::min(k, n);
    std::vector<std::tuple<double, int, std::size_t>> dist(n);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (std::size_t r = 0; r < n; ++r) {
        dist[r] = {(reference.row(static_cast<Eigen::Index>(r)) - x.row(i)).squaredNorm(),
                   labels[r], r};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
      std::size_t ones = 0;
      for (std::size_t r = 0; r < kk; ++r) ones += std::get<1>(dist[r]) == 1 ? 1 : 0;
      out[static_cast<std::size_t>(i)] = 2 * ones > kk ? 1 : 0;
    }
    return out;
  }
};

}  // namespace featrec

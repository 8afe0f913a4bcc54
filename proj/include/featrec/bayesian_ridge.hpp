#pragma once

// Bayesian ridge regression with evidence-maximising updates of the noise
// precision (alpha) and weight precision (lambda), Gamma(1e-6, 1e-6)
// hyper-priors on both.
//
//   posterior cov   S = (alpha X^T X + lambda I)^{-1}
//   posterior mean  m = alpha S X^T y
//   gamma  = sum_i alpha s_i / (lambda + alpha s_i)   (s_i eigenvalues of X^T X)
//   lambda = (gamma + 2 l1) / (|m|^2 + 2 l2)
//   alpha  = (n - gamma + 2 a1) / (|y - X m|^2 + 2 a2)
//
// X and y are centred first; the intercept is recovered from the means.

#include <cmath>

#include "featrec/linalg.hpp"
#include "featrec/rng.hpp"

namespace featrec {

struct BayesianRidgePosterior {
  Vector coef_mean;
  Matrix coef_cov;
  double noise_variance = 1.0;
  double intercept = 0.0;
  Vector x_mean;  // training means of the regressors

  Vector predict_mean(const Matrix& x) const {
    return (x * coef_mean).array() + intercept;
  }

  // Symmetric square root of coef_cov (PSD), used to draw coefficients.
  Matrix cov_factor() const {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(coef_cov);
    const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  }
};

struct BayesianRidgeOptions {
  std::size_t max_iter = 50;
  double tol = 1e-4;
  double alpha_1 = 1e-6, alpha_2 = 1e-6;
  double lambda_1 = 1e-6, lambda_2 = 1e-6;
};

inline BayesianRidgePosterior fit_bayesian_ridge(const Matrix& x, const Vector& y,
                                                 const BayesianRidgeOptions& opt = {}) {
  if (x.rows() != y.size()) throw InvalidArgument("bayesian ridge: row mismatch");
  if (x.rows() < 2) throw InvalidArgument("bayesian ridge: need at least 2 rows");
  const auto n = static_cast<double>(x.rows());
  const auto p = x.cols();

  BayesianRidgePosterior post;
  post.x_mean = x.colwise().mean().transpose();
  const double y_mean = y.mean();
  const Matrix xc = x.rowwise() - post.x_mean.transpose();
  const Vector yc = y.array() - y_mean;

  Matrix gram = xc.transpose() * xc;
  gram = 0.5 * (gram + gram.transpose()).eval();
  const Vector xty = xc.transpose() * yc;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector s = eig.eigenvalues().cwiseMax(0.0);
  const Matrix& v = eig.eigenvectors();
  const Vector vty = v.transpose() * xty;

  const double var_y = yc.squaredNorm() / n;
  double alpha = 1.0 / (var_y + std::numeric_limits<double>::epsilon());
  double lambda = 1.0;
  Vector coef = Vector::Zero(p);

  auto solve_mean = [&](double a, double l) {
    // m = V diag(a / (a s + l)) V^T X^T y
    Vector scaled(p);
    for (Eigen::Index i = 0; i < p; ++i) scaled(i) = a * vty(i) / (a * s(i) + l);
    return Vector(v * scaled);
  };

  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    const Vector next = solve_mean(alpha, lambda);
    const double rss = (yc - xc * next).squaredNorm();
    double gamma = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) gamma += alpha * s(i) / (lambda + alpha * s(i));
    lambda = (gamma + 2 * opt.lambda_1) / (next.squaredNorm() + 2 * opt.lambda_2);
    alpha = (n - gamma + 2 * opt.alpha_1) / (rss + 2 * opt.alpha_2);
    const bool converged = it > 0 && (next - coef).cwiseAbs().sum() < opt.tol;
    coef = next;
    if (converged) break;
  }

  post.coef_mean = solve_mean(alpha, lambda);
  Vector inv(p);
  for (Eigen::Index i = 0; i < p; ++i) inv(i) = 1.0 / (alpha * s(i) + lambda);
  post.coef_cov = v * inv.asDiagonal() * v.transpose();
  post.coef_cov = 0.5 * (post.coef_cov + post.coef_cov.transpose()).eval();
  post.noise_variance = 1.0 / alpha;
  post.intercept = y_mean - post.x_mean.dot(post.coef_mean);
  return post;
}

}  // namespace featrec

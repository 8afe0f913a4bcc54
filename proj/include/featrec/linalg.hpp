#pragma once

// Covariance summaries, symmetric solves and ordinary least squares.

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "featrec/dataset.hpp"

namespace featrec {

struct CovarianceSummary {
  Vector mean;
  Matrix cov;  // unbiased, divisor n - 1
  std::size_t n_samples = 0;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

inline CovarianceSummary covariance(const Matrix& columns) {
  if (columns.rows() < 2) throw InvalidArgument("covariance needs at least 2 rows");
  if (!columns.allFinite()) throw InvalidArgument("covariance input has non-finite entries");
  CovarianceSummary out;
  out.n_samples = static_cast<std::size_t>(columns.rows());
  out.mean = columns.colwise().mean().transpose();
  const Matrix centered = columns.rowwise() - out.mean.transpose();
  out.cov = (centered.transpose() * centered) / static_cast<double>(columns.rows() - 1);
  // Exact symmetry; the product is symmetric only up to rounding.
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

inline Matrix select(const Matrix& m, const IndexList& rows, const IndexList& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
  return out;
}

inline Matrix select_cols(const Matrix& m, const IndexList& cols) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(cols[j]));
  return out;
}

inline bool is_symmetric(const Matrix& a, double tol = 1e-8) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

// Solves (A + ridge * I) x = b for symmetric A. Uses LDL^T; when the
// shifted matrix is numerically singular or indefinite, returns the
// minimum-norm least-squares solution from an eigen decomposition.
inline Vector solve_spd(const Matrix& a, const Vector& b, double ridge = 0.0) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw InvalidArgument("solve_spd: dimension mismatch");
  }
  if (ridge < 0.0) throw InvalidArgument("solve_spd: ridge must be >= 0");
  if (!is_symmetric(a)) throw InvalidArgument("solve_spd: matrix is not symmetric");
  if (a.rows() == 0) return Vector();

  Matrix shifted = a;
  shifted.diagonal().array() += ridge;

  const Eigen::LDLT<Matrix> ldlt(shifted);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-13) {
    Vector x = ldlt.solve(b);
    if (x.allFinite()) return x;
  }

  const Eigen::SelfAdjointEigenSolver<Matrix> eig(shifted);
  const Vector& lambda = eig.eigenvalues();
  const double cutoff = lambda.cwiseAbs().maxCoeff() * static_cast<double>(a.rows()) *
                        std::numeric_limits<double>::epsilon() * 16.0;
  const Vector proj = eig.eigenvectors().transpose() * b;
  Vector scaled = Vector::Zero(proj.size());
  for (Eigen::Index i = 0; i < proj.size(); ++i) {
    if (std::abs(lambda(i)) > cutoff) scaled(i) = proj(i) / lambda(i);
  }
  return eig.eigenvectors() * scaled;
}

// Ridge added to a covariance block before inversion when redundant
// columns make it singular: 1e-9 * trace / dim.
inline double covariance_ridge(const Matrix& cov) {
  if (cov.rows() == 0) return 0.0;
  return 1e-9 * cov.trace() / static_cast<double>(cov.rows());
}

// Ordinary least squares with intercept.
struct LinearFit {
  Vector coef;
  double intercept = 0.0;

  Vector predict(const Matrix& x) const {
    return (x * coef).array() + intercept;
  }
};

inline LinearFit fit_ols(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw InvalidArgument("fit_ols: row mismatch");
  if (x.rows() < 2) throw InvalidArgument("fit_ols: need at least 2 rows");
  const Vector x_mean = x.colwise().mean().transpose();
  const double y_mean = y.mean();
  const Matrix xc = x.rowwise() - x_mean.transpose();
  const Vector yc = y.array() - y_mean;
  Matrix gram = xc.transpose() * xc;
  gram = 0.5 * (gram + gram.transpose()).eval();
  LinearFit fit;
  fit.coef = solve_spd(gram, xc.transpose() * yc, 0.0);
  fit.intercept = y_mean - x_mean.dot(fit.coef);
  return fit;
}

}  // namespace featrec

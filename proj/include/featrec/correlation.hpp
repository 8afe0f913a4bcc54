#pragma once

// Multiple correlation coefficient (linear imputability).
//
//   rho^2 = c^T S^{-1} c / var(target)
//
// with c the covariances between target and the known columns and S the
// covariance block of the known columns. The quadratic form is evaluated on
// the correlation scale so the result is invariant to per-column affine
// rescaling; weights are mapped back to the original scale.

#include <algorithm>
#include <cmath>

#include "featrec/linalg.hpp"

namespace featrec {

struct MultipleCorrelationResult {
  double rho = 0.0;
  double rho_squared = 0.0;
  Vector optimal_weights;  // one per known column, in the order given
  std::size_t target_index = 0;
};

inline MultipleCorrelationResult multiple_correlation(const CovarianceSummary& cs,
                                                      std::size_t target,
                                                      const IndexList& known) {
  const std::size_t p = cs.dim();
  if (known.empty()) throw InvalidArgument("multiple_correlation: known set is empty");
  if (target >= p) throw InvalidArgument("multiple_correlation: target out of range");
  for (auto j : known) {
    if (j >= p) throw InvalidArgument("multiple_correlation: known index out of range");
    if (j == target) throw InvalidArgument("multiple_correlation: target is in the known set");
  }
  const auto t = static_cast<Eigen::Index>(target);
  const double var_t = cs.cov(t, t);
  if (!(var_t > 0.0)) throw InvalidArgument("multiple_correlation: target has zero variance");
  const double sd_t = std::sqrt(var_t);

  // Known columns with zero variance carry no linear information.
  IndexList active;
  std::vector<double> sds;
  for (auto j : known) {
    const double v = cs.cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    if (v > 0.0) {
      active.push_back(j);
      sds.push_back(std::sqrt(v));
    }
  }

  MultipleCorrelationResult out;
  out.target_index = target;
  out.optimal_weights = Vector::Zero(static_cast<Eigen::Index>(known.size()));
  if (active.empty()) return out;

  const auto m = static_cast<Eigen::Index>(active.size());
  Matrix corr(m, m);
  Vector c(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto ja = static_cast<Eigen::Index>(active[static_cast<std::size_t>(a)]);
    c(a) = cs.cov(ja, t) / (sds[static_cast<std::size_t>(a)] * sd_t);
    for (Eigen::Index b = 0; b < m; ++b) {
      const auto jb = static_cast<Eigen::Index>(active[static_cast<std::size_t>(b)]);
      corr(a, b) = cs.cov(ja, jb) /
                   (sds[static_cast<std::size_t>(a)] * sds[static_cast<std::size_t>(b)]);
    }
  }
  corr = 0.5 * (corr + corr.transpose()).eval();

  const Vector w = solve_spd(corr, c, covariance_ridge(corr));
  out.rho_squared = std::clamp(c.dot(w), 0.0, 1.0);
  out.rho = std::sqrt(out.rho_squared);

  std::size_t a = 0;
  for (std::size_t i = 0; i < known.size(); ++i) {
    if (a < active.size() && known[i] == active[a]) {
      out.optimal_weights(static_cast<Eigen::Index>(i)) =
          w(static_cast<Eigen::Index>(a)) * sd_t / sds[a];
      ++a;
    }
  }
  return out;
}

}  // namespace featrec

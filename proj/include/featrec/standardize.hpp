#pragma once

#include <cmath>

#include "featrec/dataset.hpp"

namespace featrec {

inline constexpr double kStdFloor = 1e-12;

// Per-column location/scale fit on training rows.
struct StandardizationParams {
  Vector means;
  Vector stds;

  std::size_t size() const { return static_cast<std::size_t>(means.size()); }

  Matrix apply(const Matrix& x) const {
    return (x.rowwise() - means.transpose()).array().rowwise() / stds.transpose().array();
  }

  Matrix invert(const Matrix& z) const {
    return (z.array().rowwise() * stds.transpose().array()).matrix().rowwise() +
           means.transpose();
  }

  double apply(double x, std::size_t col) const {
    return (x - means(static_cast<Eigen::Index>(col))) / stds(static_cast<Eigen::Index>(col));
  }
  double invert(double z, std::size_t col) const {
    return z * stds(static_cast<Eigen::Index>(col)) + means(static_cast<Eigen::Index>(col));
  }
};

inline StandardizationParams standardize_fit(const Matrix& x) {
  if (x.rows() < 2) throw InvalidArgument("standardization needs at least 2 rows");
  StandardizationParams params;
  params.means = x.colwise().mean().transpose();
  params.stds.resize(x.cols());
  const double denom = static_cast<double>(x.rows() - 1);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double ss = (x.col(j).array() - params.means(j)).square().sum();
    params.stds(j) = std::max(std::sqrt(ss / denom), kStdFloor);
  }
  return params;
}

inline StandardizationParams standardize_fit(const Dataset& train) {
  return standardize_fit(train.features);
}

inline Dataset standardize_apply(const StandardizationParams& params, const Dataset& ds) {
  return ds.with_features(params.apply(ds.features));
}

inline Dataset standardize_invert(const StandardizationParams& params, const Dataset& ds) {
  return ds.with_features(params.invert(ds.features));
}

}  // namespace featrec

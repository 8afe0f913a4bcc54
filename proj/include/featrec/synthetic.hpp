#pragma once

// Synthetic binary classification data with informative and redundant
// features.
//
// Each class is a union of Gaussian clusters centred on distinct vertices
// of the hypercube {-sep, +sep}^k (k = informative features). Within a
// cluster, standard normal draws are mixed by a random matrix, giving each
// cluster its own covariance. Redundant features are a fixed random linear
// combination of the informative ones, and independent Gaussian noise is
// added to every feature afterwards.

#include <set>
#include <string>

#include "featrec/dataset.hpp"

namespace featrec {

struct SyntheticOptions {
  std::size_t clusters_per_class = 2;
  double class_sep = 1.0;
  double noise_variance = 0.1;
  double flip_fraction = 0.01;
};

inline std::string synthetic_tag(std::size_t n_informative, std::size_t n_redundant) {
  return "ds_" + std::to_string(n_informative + n_redundant) + "_" +
         std::to_string(n_informative) + "_" + std::to_string(n_redundant);
}

struct SyntheticDataset {
  Dataset data;
  Matrix redundant_weights;  // n_informative x n_redundant
};

inline SyntheticDataset generate_synthetic_detailed(std::size_t n_rows,
                                                    std::size_t n_informative,
                                                    std::size_t n_redundant,
                                                    std::uint64_t seed,
                                                    const SyntheticOptions& opt = {}) {
  if (n_informative < 2) throw InvalidArgument("n_informative must be >= 2");
  if (n_rows < 10) throw InvalidArgument("n_rows must be >= 10");
  if (opt.clusters_per_class < 1) throw InvalidArgument("clusters_per_class must be >= 1");
  if (opt.noise_variance < 0.0) throw InvalidArgument("noise_variance must be >= 0");

  const std::size_t n_clusters = 2 * opt.clusters_per_class;
  if (n_informative < 63 && (std::uint64_t{1} << n_informative) < n_clusters) {
    throw InvalidArgument("too few informative features for the requested clusters");
  }

  Rng rng(derive_seed(seed, "synthetic"));
  const auto k = static_cast<Eigen::Index>(n_informative);
  const auto r = static_cast<Eigen::Index>(n_redundant);
  const auto n = static_cast<Eigen::Index>(n_rows);

  // Distinct hypercube vertices, one per cluster.
  std::set<std::vector<bool>> used;
  Matrix centroids(static_cast<Eigen::Index>(n_clusters), k);
  for (std::size_t c = 0; c < n_clusters; ++c) {
    std::vector<bool> bits(n_informative);
    do {
      for (std::size_t j = 0; j < n_informative; ++j) bits[j] = rng.below(2) == 1;
    } while (used.count(bits) > 0);
    used.insert(bits);
    for (std::size_t j = 0; j < n_informative; ++j) {
      centroids(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) =
          bits[j] ? opt.class_sep : -opt.class_sep;
    }
  }

  Matrix informative(n, k);
  Labels labels(n_rows);
  std::size_t row = 0;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    std::size_t count = n_rows / n_clusters + (c < n_rows % n_clusters ? 1 : 0);
    Matrix mixing(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) mixing(a, b) = rng.uniform(-1.0, 1.0);
    Matrix draws(static_cast<Eigen::Index>(count), k);
    for (Eigen::Index i = 0; i < draws.rows(); ++i)
      for (Eigen::Index j = 0; j < k; ++j) draws(i, j) = rng.normal();
    Matrix block = draws * mixing;
    block.rowwise() += centroids.row(static_cast<Eigen::Index>(c));
    informative.middleRows(static_cast<Eigen::Index>(row), block.rows()) = block;
    for (std::size_t i = 0; i < count; ++i) labels[row + i] = static_cast<int>(c % 2);
    row += count;
  }

  Matrix weights(k, r);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < r; ++b) weights(a, b) = rng.uniform(-1.0, 1.0);

  Matrix x(n, k + r);
  x.leftCols(k) = informative;
  if (r > 0) x.rightCols(r) = informative * weights;

  if (opt.noise_variance > 0.0) {
    const double sd = std::sqrt(opt.noise_variance);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < n; ++i) x(i, j) += rng.normal(0.0, sd);
  }

  for (auto& y : labels) {
    if (rng.uniform() < opt.flip_fraction) y = static_cast<int>(rng.below(2));
  }

  // Shuffle rows so clusters are interleaved.
  IndexList order(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) order[i] = i;
  rng.shuffle(order);

  SyntheticDataset out;
  out.data.features.resize(n, k + r);
  out.data.labels.resize(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) {
    out.data.features.row(static_cast<Eigen::Index>(i)) =
        x.row(static_cast<Eigen::Index>(order[i]));
    out.data.labels[i] = labels[order[i]];
  }
  for (std::size_t j = 0; j < n_informative + n_redundant; ++j) {
    out.data.feature_names.push_back((j < n_informative ? "inf" : "red") +
                                     std::to_string(j < n_informative ? j : j - n_informative));
  }
  out.data.source_tag = synthetic_tag(n_informative, n_redundant);
  out.redundant_weights = std::move(weights);
  return out;
}

inline Dataset generate_synthetic(std::size_t n_rows, std::size_t n_informative,
                                  std::size_t n_redundant, std::uint64_t seed,
                                  const SyntheticOptions& opt = {}) {
  return generate_synthetic_detailed(n_rows, n_informative, n_redundant, seed, opt).data;
}

}  // namespace featrec

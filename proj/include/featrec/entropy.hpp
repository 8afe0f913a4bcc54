#pragma once

// Kozachenko-Leonenko nearest-neighbour estimate of differential entropy
// (nats), and the conditional entropy H(X | Y) = H(X, Y) - H(Y) built on it.
//
//   H = psi(n) - psi(k) + log V_d + (d / n) * sum_i log eps_i
//
// eps_i is the Euclidean distance from sample i to its k-th nearest
// neighbour and V_d the volume of the d-dimensional unit ball.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "featrec/linalg.hpp"

namespace featrec {

inline constexpr std::size_t kMaxEntropyDimension = 8;
inline constexpr std::size_t kDefaultEntropyK = 5;

struct EntropyEstimate {
  double value = 0.0;
  std::size_t k = 0;
  std::size_t n_samples = 0;
  std::size_t dimension = 0;
};

// Digamma at a positive integer: -gamma + sum_{i<n} 1/i.
inline double digamma_int(std::size_t n) {
  constexpr double euler_gamma = 0.57721566490153286060651209;
  double h = 0.0;
  for (std::size_t i = 1; i < n; ++i) h += 1.0 / static_cast<double>(i);
  return h - euler_gamma;
}

inline double log_unit_ball_volume(std::size_t d) {
  const double half = 0.5 * static_cast<double>(d);
  return half * std::log(std::numbers::pi) - std::lgamma(half + 1.0);
}

namespace detail {

// Sum over samples of log(distance to k-th neighbour); -inf if any
// distance is zero.
inline double sum_log_knn_distance(const Matrix& x, std::size_t k) {
  const Eigen::Index n = x.rows();
  // Row-major copy for contiguous per-sample access.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pts = x;
  const Eigen::Index d = x.cols();
  std::vector<double> dist(static_cast<std::size_t>(n - 1));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* pi = pts.data() + i * d;
    std::size_t w = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double* pj = pts.data() + j * d;
      double s = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const double diff = pi[c] - pj[c];
        s += diff * diff;
      }
      dist[w++] = s;
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    const double sq = dist[k - 1];
    if (sq <= 0.0) return -std::numeric_limits<double>::infinity();
    total += 0.5 * std::log(sq);
  }
  return total;
}

}  // namespace detail

inline EntropyEstimate kl_entropy(const Matrix& samples, std::size_t k = kDefaultEntropyK,
                                  std::uint64_t jitter_seed = kDefaultSeed) {
  const auto n = static_cast<std::size_t>(samples.rows());
  const auto d = static_cast<std::size_t>(samples.cols());
  if (d < 1) throw InvalidArgument("kl_entropy: dimension must be >= 1");
  if (d > kMaxEntropyDimension) {
    throw DimensionLimitError("kl_entropy: dimension " + std::to_string(d) +
                              " exceeds the supported limit of " +
                              std::to_string(kMaxEntropyDimension));
  }
  if (k < 1) throw InvalidArgument("kl_entropy: k must be >= 1");
  if (k >= n) throw InvalidArgument("kl_entropy: k must be smaller than the sample count");
  if (!samples.allFinite()) throw InvalidArgument("kl_entropy: non-finite samples");

  bool all_identical = true;
  for (Eigen::Index i = 1; i < samples.rows() && all_identical; ++i) {
    all_identical = (samples.row(i) == samples.row(0));
  }
  if (all_identical) throw InvalidArgument("kl_entropy: all samples are identical");

  double sum_log = detail::sum_log_knn_distance(samples, k);
  if (!std::isfinite(sum_log)) {
    // Duplicate points: break ties with a tiny deterministic jitter.
    Rng rng(derive_seed(jitter_seed, "kl-jitter"));
    Matrix jittered = samples;
    for (Eigen::Index j = 0; j < jittered.cols(); ++j)
      for (Eigen::Index i = 0; i < jittered.rows(); ++i)
        jittered(i, j) += rng.uniform(-1e-10, 1e-10);
    sum_log = detail::sum_log_knn_distance(jittered, k);
  }

  EntropyEstimate out;
  out.k = k;
  out.n_samples = n;
  out.dimension = d;
  out.value = digamma_int(n) - digamma_int(k) + log_unit_ball_volume(d) +
              static_cast<double>(d) / static_cast<double>(n) * sum_log;
  return out;
}

// H(target | known). Information imputability is the negated value.
inline EntropyEstimate conditional_entropy(const Matrix& samples, std::size_t target,
                                           const IndexList& known,
                                           std::size_t k = kDefaultEntropyK,
                                           std::uint64_t jitter_seed = kDefaultSeed) {
  if (known.empty()) throw InvalidArgument("conditional_entropy: known set is empty");
  const auto p = static_cast<std::size_t>(samples.cols());
  if (target >= p) throw InvalidArgument("conditional_entropy: target out of range");
  for (auto j : known) {
    if (j >= p || j == target) {
      throw InvalidArgument("conditional_entropy: invalid known index");
    }
  }
  if (known.size() + 1 > kMaxEntropyDimension) {
    throw DimensionLimitError("conditional_entropy: joint dimension " +
                              std::to_string(known.size() + 1) +
                              " exceeds the supported limit of " +
                              std::to_string(kMaxEntropyDimension));
  }
  IndexList joint_cols{target};
  joint_cols.insert(joint_cols.end(), known.begin(), known.end());
  const auto joint = kl_entropy(select_cols(samples, joint_cols), k, jitter_seed);
  const auto marginal = kl_entropy(select_cols(samples, known), k, jitter_seed);
  EntropyEstimate out = joint;
  out.value = joint.value - marginal.value;
  return out;
}

}  // namespace featrec

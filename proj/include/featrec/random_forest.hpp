#pragma once

#include <cmath>

#include "featrec/tree.hpp"

namespace featrec {

struct RandomForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;     // 0: grow until pure
  std::size_t max_features = 0;  // 0: floor(sqrt(p))
  bool bootstrap = true;

  friend bool operator==(const RandomForestParams&, const RandomForestParams&) = default;
};

struct RandomForestModel {
  std::vector<Tree> trees;

  // Majority vote of per-tree leaf classes; ties go to class 0.
  Labels predict(const Matrix& x) const {
    Labels out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto row = x.row(i);
      std::size_t ones = 0;
      for (const auto& t : trees) ones += t.predict(row) > 0.5 ? 1 : 0;
      out[static_cast<std::size_t>(i)] = 2 * ones > trees.size() ? 1 : 0;
    }
    return out;
  }
};

inline std::size_t default_max_features(std::size_t p) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));
}

inline RandomForestModel fit_random_forest(const Matrix& x, const Labels& labels,
                                           const RandomForestParams& params,
                                           std::uint64_t seed) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw InvalidArgument("random forest: row mismatch");
  }
  if (params.n_trees < 1) throw InvalidArgument("random forest: n_trees must be >= 1");
  const auto n = labels.size();
  const auto p = static_cast<std::size_t>(x.cols());
  const SortedColumns sorted(x);

  TreeGrowOptions grow;
  grow.max_depth = params.max_depth;
  grow.max_features = params.max_features == 0 ? default_max_features(p) : params.max_features;
  const GiniCriterion crit{};

  RandomForestModel model;
  model.trees.reserve(params.n_trees);
  std::vector<SplitStats> stats(n);
  std::vector<char> in_bag(n);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, "rf-tree", static_cast<std::uint64_t>(t)));
    std::vector<double> counts(n, params.bootstrap ? 0.0 : 1.0);
    if (params.bootstrap) {
      for (std::size_t k = 0; k < n; ++k) counts[rng.below(n)] += 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      in_bag[i] = counts[i] > 0.0;
      stats[i] = labels[i] == 1 ? SplitStats{0.0, counts[i]} : SplitStats{counts[i], 0.0};
    }
    model.trees.push_back(grow_tree(x, sorted, stats, in_bag, crit, grow, &rng));
  }
  return model;
}

}  // namespace featrec

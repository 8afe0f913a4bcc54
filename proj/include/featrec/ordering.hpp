#pragma once

// Imputation orderings for multi-feature masks. Features that are easiest
// to reconstruct are imputed first, so later features can use them.

#include <string>
#include <vector>

#include "featrec/correlation.hpp"
#include "featrec/entropy.hpp"

namespace featrec {

enum class OrderCriterion { linear_imputability, information_imputability, none };

inline std::string to_string(OrderCriterion c) {
  switch (c) {
    case OrderCriterion::linear_imputability: return "linear-imputability";
    case OrderCriterion::information_imputability: return "information-imputability";
    case OrderCriterion::none: return "none";
  }
  return "none";
}

inline OrderCriterion order_criterion_from_string(const std::string& s) {
  if (s == "linear-imputability") return OrderCriterion::linear_imputability;
  if (s == "information-imputability") return OrderCriterion::information_imputability;
  if (s == "none") return OrderCriterion::none;
  throw InvalidArgument("unknown ordering criterion '" + s + "'");
}

struct ImputationOrder {
  IndexList ordered_indices;
  OrderCriterion criterion = OrderCriterion::none;
  bool recalculated = false;
  std::vector<double> scores;  // score of each ordered feature when it was picked

  friend bool operator==(const ImputationOrder& a, const ImputationOrder& b) {
    return a.ordered_indices == b.ordered_indices && a.criterion == b.criterion &&
           a.recalculated == b.recalculated;
  }
};

namespace detail {

inline void check_order_inputs(const Dataset& train, const FeatureMask& mask) {
  if (mask.empty()) throw InvalidArgument("ordering: mask is empty");
  if (mask.missing.size() >= train.n_features()) {
    throw InvalidArgument("ordering: all features are missing");
  }
  for (auto j : mask.missing) {
    if (j >= train.n_features()) throw InvalidArgument("ordering: mask index out of range");
  }
}

// Lowest index among the maximal scores.
inline std::size_t argmax_lowest(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

}  // namespace detail

// Greedy order by multiple correlation against the known features. With
// recalc, each picked feature joins the known set before the next pick;
// without it the scores are computed once against the originally known
// features, which is what linear-regression imputation must use. A
// zero-variance candidate scores 0.
inline ImputationOrder order_by_linear_imputability(const Dataset& train, const FeatureMask& mask,
                                                    bool recalc) {
  detail::check_order_inputs(train, mask);
  const CovarianceSummary cs = covariance(train.features);
  IndexList known = mask.known(train.n_features());
  IndexList pending = mask.missing;  // ascending, so ties resolve to the lowest index

  auto score_of = [&](std::size_t j, const IndexList& against) {
    const auto jj = static_cast<Eigen::Index>(j);
    if (!(cs.cov(jj, jj) > 0.0)) return 0.0;
    return multiple_correlation(cs, j, against).rho;
  };

  ImputationOrder order;
  order.criterion = OrderCriterion::linear_imputability;
  order.recalculated = recalc;
  std::vector<double> once;
  if (!recalc) {
    for (auto j : pending) once.push_back(score_of(j, known));
  }
  while (!pending.empty()) {
    std::vector<double> scores;
    if (recalc) {
      for (auto j : pending) scores.push_back(score_of(j, known));
    } else {
      scores = once;
    }
    const std::size_t pick = detail::argmax_lowest(scores);
    const std::size_t feature = pending[pick];
    order.ordered_indices.push_back(feature);
    order.scores.push_back(scores[pick]);
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pick));
    if (!recalc) once.erase(once.begin() + static_cast<std::ptrdiff_t>(pick));
    if (recalc) {
      known.insert(std::upper_bound(known.begin(), known.end(), feature), feature);
    }
  }
  return order;
}

// Descending information imputability -H(X_j | known), computed once
// against the known features. The joint dimension of every estimate is
// |known| + 1 and must respect the estimator limit.
inline ImputationOrder order_by_information_imputability(const Dataset& train,
                                                         const FeatureMask& mask,
                                                         std::size_t k = kDefaultEntropyK,
                                                         std::uint64_t seed = kDefaultSeed) {
  detail::check_order_inputs(train, mask);
  const IndexList known = mask.known(train.n_features());
  if (known.size() + 1 > kMaxEntropyDimension) {
    throw DimensionLimitError("information imputability: " + std::to_string(known.size()) +
                              " known features give joint dimension " +
                              std::to_string(known.size() + 1) + ", limit is " +
                              std::to_string(kMaxEntropyDimension));
  }
  std::vector<double> scores;
  for (auto j : mask.missing) {
    scores.push_back(-conditional_entropy(train.features, j, known, k, seed).value);
  }
  ImputationOrder order;
  order.criterion = OrderCriterion::information_imputability;
  order.recalculated = false;
  IndexList pending = mask.missing;
  while (!pending.empty()) {
    const std::size_t pick = detail::argmax_lowest(scores);
    order.ordered_indices.push_back(pending[pick]);
    order.scores.push_back(scores[pick]);
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pick));
    scores.erase(scores.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return order;
}

// Mask order as given, used by methods that impute without a ranking.
inline ImputationOrder natural_order(const FeatureMask& mask) {
  ImputationOrder order;
  order.ordered_indices = mask.missing;
  return order;
}

}  // namespace featrec

#pragma once

// Binary decision trees grown level by level with exact greedy splits.
//
// Each feature's rows are sorted once per training matrix; a level is then
// grown by one pass over every feature's sorted order, accumulating the
// left-hand statistics of every open node at the same time. Thresholds sit
// midway between consecutive distinct values, rows with value < threshold
// go left. Candidate splits are visited in (feature, threshold) ascending
// order and only a strictly larger gain replaces the incumbent, so ties go
// to the lowest feature index. A feature with a single distinct value in a
// node offers no threshold and can never be chosen.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "featrec/dataset.hpp"
#include "featrec/rng.hpp"

namespace featrec {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;

  template <typename Row>
  double predict(const Row& row) const {
    int at = 0;
    while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(at)];
      at = row(n.feature) < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)].value;
  }

  std::size_t depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].feature >= 0) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
      best = std::max(best, d[i]);
    }
    return best;
  }
};

// Per-feature row order, ascending by value then by row index.
class SortedColumns {
 public:
  SortedColumns() = default;
  explicit SortedColumns(const Matrix& x) : order_(static_cast<std::size_t>(x.cols())) {
    const auto n = static_cast<std::uint32_t>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      auto& ord = order_[static_cast<std::size_t>(j)];
      ord.resize(n);
      std::iota(ord.begin(), ord.end(), 0u);
      const double* col = x.col(j).data();
      std::stable_sort(ord.begin(), ord.end(),
                       [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }
  }
  const std::vector<std::uint32_t>& column(std::size_t j) const { return order_[j]; }
  std::size_t n_features() const { return order_.size(); }

 private:
  std::vector<std::vector<std::uint32_t>> order_;
};

// Two additive per-row statistics: (gradient, hessian) for boosting,
// (weight of class 0, weight of class 1) for classification trees.
struct SplitStats {
  double a = 0.0;
  double b = 0.0;
  SplitStats& operator+=(const SplitStats& o) {
    a += o.a;
    b += o.b;
    return *this;
  }
  friend SplitStats operator-(SplitStats l, const SplitStats& r) {
    l.a -= r.a;
    l.b -= r.b;
    return l;
  }
};

// Second-order boosting objective with L2 leaf penalty.
struct GradientCriterion {
  double lambda = 1.0;
  double min_child_weight = 1.0;

  double score(const SplitStats& s) const { return s.a * s.a / (s.b + lambda); }
  bool admissible(const SplitStats& s) const { return s.b >= min_child_weight; }
  double leaf(const SplitStats& s) const { return -s.a / (s.b + lambda); }
};

// Gini impurity; score is (w0^2 + w1^2) / w, so the gain equals the weighted
// impurity decrease. Leaf value is the class-1 share.
struct GiniCriterion {
  double min_leaf_weight = 1.0;

  double score(const SplitStats& s) const {
    const double w = s.a + s.b;
    return w > 0.0 ? (s.a * s.a + s.b * s.b) / w : 0.0;
  }
  bool admissible(const SplitStats& s) const { return s.a + s.b >= min_leaf_weight; }
  double leaf(const SplitStats& s) const {
    const double w = s.a + s.b;
    return w > 0.0 ? s.b / w : 0.0;
  }
};

struct TreeGrowOptions {
  std::size_t max_depth = 6;       // 0 means unlimited
  std::size_t max_features = 0;    // per-node feature subsample; 0 means all
  double min_gain = 1e-12;
};

// Grows one tree. Rows with stats.a == stats.b == 0 and `in_bag` false are
// ignored. `rng` is only used when max_features subsamples.
template <typename Criterion>
Tree grow_tree(const Matrix& x, const SortedColumns& sorted, const std::vector<SplitStats>& stats,
               const std::vector<char>& in_bag, const Criterion& crit,
               const TreeGrowOptions& opt, Rng* rng = nullptr) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = static_cast<std::size_t>(x.cols());
  const std::size_t depth_cap = opt.max_depth == 0 ? 64 : opt.max_depth;
  const bool subsample = opt.max_features > 0 && opt.max_features < p;

  Tree tree;
  std::vector<SplitStats> totals;
  std::vector<int> node_of(n, -1);
  {
    SplitStats root;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_bag[i]) continue;
      node_of[i] = 0;
      root += stats[i];
    }
    tree.nodes.push_back(TreeNode{});
    totals.push_back(root);
  }

  struct Candidate {
    double gain;
    int feature = -1;
    double threshold = 0.0;
    SplitStats left;
  };
  struct ScanState {
    SplitStats acc;
    double last = 0.0;
    bool has_last = false;
  };

  std::vector<int> frontier{0};
  for (std::size_t depth = 0; depth < depth_cap && !frontier.empty(); ++depth) {
    std::vector<int> slot_of(tree.nodes.size(), -1);
    std::vector<int> open;
    for (int nd : frontier) {
      const auto& t = totals[static_cast<std::size_t>(nd)];
      if (!crit.admissible(t)) continue;
      slot_of[static_cast<std::size_t>(nd)] = static_cast<int>(open.size());
      open.push_back(nd);
    }
    if (open.empty()) break;

    std::vector<std::vector<char>> allowed;
    if (subsample) {
      allowed.assign(open.size(), std::vector<char>(p, 0));
      for (auto& mask : allowed) {
        for (auto f : sample_without_replacement(*rng, p, opt.max_features)) mask[f] = 1;
      }
    }

    std::vector<Candidate> best(open.size());
    std::vector<double> parent_score(open.size());
    for (std::size_t s = 0; s < open.size(); ++s) {
      best[s].gain = opt.min_gain;
      parent_score[s] = crit.score(totals[static_cast<std::size_t>(open[s])]);
    }

    std::vector<ScanState> scan(open.size());
    for (std::size_t f = 0; f < p; ++f) {
      std::fill(scan.begin(), scan.end(), ScanState{});
      const double* col = x.col(static_cast<Eigen::Index>(f)).data();
      for (std::uint32_t row : sorted.column(f)) {
        const int nd = node_of[row];
        if (nd < 0) continue;
        const int slot = slot_of[static_cast<std::size_t>(nd)];
        if (slot < 0) continue;
        const auto s = static_cast<std::size_t>(slot);
        if (subsample && !allowed[s][f]) continue;
        auto& st = scan[s];
        const double v = col[row];
        if (st.has_last && v > st.last) {
          const auto& total = totals[static_cast<std::size_t>(nd)];
          const SplitStats right = total - st.acc;
          if (crit.admissible(st.acc) && crit.admissible(right)) {
            const double gain = crit.score(st.acc) + crit.score(right) - parent_score[s];
            if (gain > best[s].gain) {
              double thr = 0.5 * (st.last + v);
              if (!(thr > st.last)) thr = v;
              best[s] = Candidate{gain, static_cast<int>(f), thr, st.acc};
            }
          }
        }
        st.acc += stats[row];
        st.last = v;
        st.has_last = true;
      }
    }

    std::vector<int> next;
    for (std::size_t s = 0; s < open.size(); ++s) {
      if (best[s].feature < 0) continue;
      const int nd = open[s];
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(TreeNode{});
      tree.nodes.push_back(TreeNode{});
      totals.push_back(best[s].left);
      totals.push_back(totals[static_cast<std::size_t>(nd)] - best[s].left);
      auto& node = tree.nodes[static_cast<std::size_t>(nd)];
      node.feature = best[s].feature;
      node.threshold = best[s].threshold;
      node.left = left;
      node.right = left + 1;
      next.push_back(left);
      next.push_back(left + 1);
    }
    if (next.empty()) break;
    for (std::size_t i = 0; i < n; ++i) {
      const int nd = node_of[i];
      if (nd < 0) continue;
      const auto& node = tree.nodes[static_cast<std::size_t>(nd)];
      if (node.feature < 0) continue;
      node_of[i] = x(static_cast<Eigen::Index>(i), node.feature) < node.threshold ? node.left
                                                                                   : node.right;
    }
    frontier = std::move(next);
  }

  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].feature < 0) tree.nodes[i].value = crit.leaf(totals[i]);
  }
  return tree;
}

}  // namespace featrec

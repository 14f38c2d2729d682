#include <algorithm>
#include <numeric>

#include "fairdiff/classifiers.hpp"
#include "fairdiff/errors.hpp"

namespace fairdiff {
namespace {

struct Builder {
  const Eigen::MatrixXd& x;
  std::span<const int> y;
  std::span<const double> w;
  const TreeParams& params;
  Rng* rng;
  double min_child_weight = 0.0;
  std::vector<TreeNode> nodes;
  std::vector<std::size_t> features;
  std::vector<std::pair<double, std::size_t>> sorted;

  int grow(std::vector<std::size_t>& rows, int depth) {
    double w0 = 0.0, w1 = 0.0;
    for (std::size_t r : rows) (y[r] ? w1 : w0) += w[r];
    const double total = w0 + w1;

    const int id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    nodes[id].proba = total > 0.0 ? w1 / total : 0.0;
    if (depth >= params.max_depth || w0 == 0.0 || w1 == 0.0) return id;

    // Maximizing sum over children of (w0^2 + w1^2) / W is minimizing the
    // weighted Gini impurity.
    const double parent_score = (w0 * w0 + w1 * w1) / total;
    double best_score = parent_score + 1e-12 * total;
    int best_feature = -1;
    double best_threshold = 0.0;

    const std::size_t d = static_cast<std::size_t>(x.cols());
    std::size_t n_try = d;
    if (params.max_features > 0 && params.max_features < d && rng) {
      n_try = params.max_features;
      for (std::size_t i = 0; i < n_try; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, d - 1);
        std::swap(features[i], features[pick(*rng)]);
      }
    }
    for (std::size_t fi = 0; fi < n_try; ++fi) {
      const std::size_t f = features[fi];
      const auto col = static_cast<Eigen::Index>(f);
      sorted.clear();
      for (std::size_t r : rows) sorted.emplace_back(x(static_cast<Eigen::Index>(r), col), r);
      std::sort(sorted.begin(), sorted.end());
      double l0 = 0.0, l1 = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const std::size_t r = sorted[i].second;
        (y[r] ? l1 : l0) += w[r];
        const double v = sorted[i].first;
        const double next = sorted[i + 1].first;
        if (v == next) continue;
        const double lw = l0 + l1;
        const double r0 = w0 - l0, r1 = w1 - l1;
        const double rw = r0 + r1;
        if (lw <= 0.0 || rw <= 0.0 || lw < min_child_weight || rw < min_child_weight) continue;
        const double score = (l0 * l0 + l1 * l1) / lw + (r0 * r0 + r1 * r1) / rw;
        if (score > best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          double mid = 0.5 * (v + next);
          if (!(mid < next)) mid = v;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    const auto col = static_cast<Eigen::Index>(best_feature);
    for (std::size_t r : rows) {
      (x(static_cast<Eigen::Index>(r), col) <= best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }
};

}  // namespace

DecisionTree DecisionTree::fit(const Eigen::MatrixXd& x, std::span<const int> y, std::span<const double> w,
                               std::span<const std::size_t> rows, const TreeParams& params, Rng* rng) {
  if (rows.empty()) throw PreconditionError("decision tree needs at least one row");
  Builder b{x, y, w, params, rng, 0.0, {}, {}, {}};
  b.features.resize(static_cast<std::size_t>(x.cols()));
  std::iota(b.features.begin(), b.features.end(), std::size_t{0});
  double total = 0.0;
  for (std::size_t r : rows) total += w[r];
  b.min_child_weight = params.min_leaf_fraction * total;
  std::vector<std::size_t> root(rows.begin(), rows.end());
  b.grow(root, 0);
  return DecisionTree(std::move(b.nodes));
}

double DecisionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int n = 0;
  while (nodes_[static_cast<std::size_t>(n)].feature >= 0) {
    const TreeNode& node = nodes_[static_cast<std::size_t>(n)];
    n = row(node.feature) <= node.threshold ? node.left : node.right;
  }
  return nodes_[static_cast<std::size_t>(n)].proba;
}

int DecisionTree::depth() const {
  std::vector<int> depth(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, depth[i]);
    if (nodes_[i].feature >= 0) {
      depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
    }
  }
  return best;
}

}  // namespace fairdiff

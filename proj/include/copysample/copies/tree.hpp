#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "copysample/core/types.hpp"

namespace copysample {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;     // taken when x[feature] <= threshold
  int right = -1;
  int label = 0;
};

struct TreeSettings {
  int max_depth = std::numeric_limits<int>::max();
  int min_leaf = 1;
};

/// CART classifier: axis-aligned binary splits chosen by Gini impurity.
class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(int input_dim, int num_classes, std::vector<TreeNode> nodes)
      : input_dim_(input_dim), num_classes_(num_classes), nodes_(std::move(nodes)) {}

  /// Single split on one feature.
  static DecisionTree stump(int input_dim, int num_classes, int feature, double threshold, int left_label,
                            int right_label) {
    std::vector<TreeNode> nodes(3);
    nodes[0] = {feature, threshold, 1, 2, left_label};
    nodes[1].label = left_label;
    nodes[2].label = right_label;
    return DecisionTree(input_dim, num_classes, std::move(nodes));
  }

  /// Fits on rows of `x`. Splits stop at purity, the depth limit, or when no
  /// threshold leaves min_leaf rows on both sides.
  static DecisionTree fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int num_classes,
                          const TreeSettings& settings) {
    DecisionTree tree;
    tree.input_dim_ = static_cast<int>(x.cols());
    tree.num_classes_ = num_classes;
    std::vector<std::size_t> rows(y.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});

    struct Pending {
      int node;
      std::size_t begin, end;
      int depth;
    };
    tree.nodes_.push_back({});
    std::vector<Pending> stack{{0, 0, rows.size(), 0}};
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes));
    std::vector<std::size_t> left_counts(static_cast<std::size_t>(num_classes));
    std::vector<std::pair<double, std::size_t>> column;

    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      const std::size_t n = job.end - job.begin;
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t i = job.begin; i < job.end; ++i) ++counts[static_cast<std::size_t>(y[rows[i]])];
      const auto majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      tree.nodes_[static_cast<std::size_t>(job.node)].label = majority;

      const bool pure = counts[static_cast<std::size_t>(majority)] == n;
      const auto min_leaf = static_cast<std::size_t>(std::max(1, settings.min_leaf));
      if (pure || job.depth >= settings.max_depth || n < 2 * min_leaf) continue;

      // Impure nodes always split when any threshold exists, even without a
      // Gini gain, so consistent data is fitted exactly.
      double best_score = std::numeric_limits<double>::infinity();
      int best_feature = -1;
      double best_threshold = 0.0;
      for (int f = 0; f < tree.input_dim_; ++f) {
        column.clear();
        for (std::size_t i = job.begin; i < job.end; ++i) column.emplace_back(x(static_cast<Eigen::Index>(rows[i]), f), rows[i]);
        std::sort(column.begin(), column.end());
        std::fill(left_counts.begin(), left_counts.end(), 0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
          ++left_counts[static_cast<std::size_t>(y[column[i].second])];
          const std::size_t nl = i + 1, nr = n - nl;
          if (column[i].first == column[i + 1].first || nl < min_leaf || nr < min_leaf) continue;
          double gl = 1.0, gr = 1.0;
          for (std::size_t c = 0; c < counts.size(); ++c) {
            const double pl = static_cast<double>(left_counts[c]) / static_cast<double>(nl);
            const double pr = static_cast<double>(counts[c] - left_counts[c]) / static_cast<double>(nr);
            gl -= pl * pl;
            gr -= pr * pr;
          }
          const double score = (static_cast<double>(nl) * gl + static_cast<double>(nr) * gr) / static_cast<double>(n);
          if (score < best_score) {
            best_score = score;
            best_feature = f;
            best_threshold = 0.5 * (column[i].first + column[i + 1].first);
            // Guard against the midpoint rounding onto the upper value.
            if (!(best_threshold < column[i + 1].first)) best_threshold = column[i].first;
          }
        }
      }
      if (best_feature < 0) continue;

      auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(job.begin),
                                rows.begin() + static_cast<std::ptrdiff_t>(job.end), [&](std::size_t r) {
                                  return x(static_cast<Eigen::Index>(r), best_feature) <= best_threshold;
                                });
      const auto split = static_cast<std::size_t>(mid - rows.begin());
      const int left = static_cast<int>(tree.nodes_.size());
      tree.nodes_.push_back({});
      tree.nodes_.push_back({});
      auto& node = tree.nodes_[static_cast<std::size_t>(job.node)];
      node.feature = best_feature;
      node.threshold = best_threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, split, job.end, job.depth + 1});
      stack.push_back({left, job.begin, split, job.depth + 1});
    }
    return tree;
  }

  ClassLabel predict(const Point& z) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
      const auto& n = nodes_[i];
      i = static_cast<std::size_t>(z[n.feature] <= n.threshold ? n.left : n.right);
    }
    return ClassLabel(nodes_[i].label);
  }

  int input_dim() const { return input_dim_; }
  int num_classes() const { return num_classes_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  int depth() const {
    int best = 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      if (n.feature >= 0) {
        stack.push_back({n.left, d + 1});
        stack.push_back({n.right, d + 1});
      }
    }
    return best;
  }

 private:
  int input_dim_ = 0;
  int num_classes_ = 0;
  std::vector<TreeNode> nodes_;
};

}  // namespace copysample

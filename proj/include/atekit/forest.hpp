#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "atekit/core.hpp"

namespace atekit::forest {

struct ForestParams {
  int n_trees = 500;
  int mtry = 0;  // 0 -> ceil(d / 3)
  int min_leaf = 5;

  static ForestParams from(const ForestConfig& cfg) { return {cfg.n_trees, cfg.mtry, cfg.min_leaf}; }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  int count = 0;  // training draws that reached the node
};

/// Axis-aligned regression tree; x[feature] <= threshold goes left.
class RegressionTree {
 public:
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  template <typename Row>
  double predict(const Row& x) const {
    int k = 0;
    while (nodes_[static_cast<std::size_t>(k)].feature >= 0) {
      const auto& node = nodes_[static_cast<std::size_t>(k)];
      k = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes_[static_cast<std::size_t>(k)].value;
  }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

 private:
  std::vector<TreeNode> nodes_;
};

struct Forest {
  std::vector<RegressionTree> trees;
  ForestParams params;  // resolved (mtry filled in)
  /// In-bag draws per tree, sorted; duplicates kept.
  std::vector<std::vector<std::uint32_t>> bootstrap_indices;
  std::uint64_t seed = 0;
  double y_min = 0.0;
  double y_max = 0.0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

/// Grows n_trees trees on with-replacement bootstrap samples of size n,
/// choosing each split by variance reduction over mtry sampled features.
/// Tree t draws from the stream (seed, t), so results do not depend on how
/// trees are scheduled. Throws TooFewRows when n < 2 * min_leaf.
Forest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestParams& params,
                  std::uint64_t seed);

struct OobPrediction {
  Eigen::VectorXd values;
  /// True for units that were in-bag for every tree (all-tree average used).
  std::vector<bool> flagged;
  std::size_t n_flagged = 0;
};

/// Out-of-bag prediction for each training row.
OobPrediction predict_oob(const Forest& forest, const Eigen::MatrixXd& X_train);

}  // namespace atekit::forest

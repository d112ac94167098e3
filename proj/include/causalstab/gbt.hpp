#pragma once

#include <Eigen/Dense>
#include <vector>

#include "causalstab/rng.hpp"

namespace cstab {

// Axis-aligned regression tree, nodes stored in a flat array.
// Leaves have feature == -1 and carry the prediction in `value`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const TreeNode& nd = nodes[static_cast<std::size_t>(i)];
      i = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }
};

struct TreeEnsemble {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  double base_score = 0.0;
  Eigen::VectorXd importance;  // normalized MDI, sums to 1 when any split exists

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

struct GbtParams {
  int rounds = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_leaf = 5;
};

// Squared-error gradient boosting with exact greedy variance-reduction
// splits. base_score = mean(y); each round fits one tree to the residuals.
// Deterministic: the rng parameter is part of the interface but the exact
// greedy builder draws nothing from it.
TreeEnsemble gbt_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const GbtParams& params, RngSpec rng);

// Per-feature impurity decrease (sample-count weighted squared-error
// reduction) summed over all splits, normalized to sum 1; all-zero when the
// ensemble has no splits.
Eigen::VectorXd gbt_importance(const TreeEnsemble& ensemble);

}  // namespace cstab

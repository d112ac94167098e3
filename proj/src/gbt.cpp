#include "causalstab/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cstab {

double TreeEnsemble::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  double out = base_score;
  for (const auto& tree : trees) out += learning_rate * tree.predict_row(x);
  return out;
}

Eigen::VectorXd TreeEnsemble::predict(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict_row(X.row(i));
  return out;
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;  // reduction in sum of squared errors
};

// Rows of the current node, kept sorted per feature so split scans need no
// sorting; lists are partitioned in place down the tree.
using SortedRows = std::vector<std::vector<int>>;

struct TreeBuilder {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& target;
  const GbtParams& params;
  RegressionTree tree;
  Eigen::VectorXd& importance_acc;

  SplitChoice best_split(const SortedRows& rows) const {
    SplitChoice best;
    const int n_node = static_cast<int>(rows[0].size());
    if (n_node < 2 * params.min_leaf) return best;
    double sum = 0.0;
    for (int r : rows[0]) sum += target[r];

    for (std::size_t j = 0; j < rows.size(); ++j) {
      const auto& order = rows[j];
      double left_sum = 0.0;
      for (int i = 0; i + 1 < n_node; ++i) {
        left_sum += target[order[static_cast<std::size_t>(i)]];
        const int n_left = i + 1;
        const int n_right = n_node - n_left;
        if (n_left < params.min_leaf) continue;
        if (n_right < params.min_leaf) break;
        const double lo = X(order[static_cast<std::size_t>(i)], static_cast<int>(j));
        const double hi = X(order[static_cast<std::size_t>(i + 1)], static_cast<int>(j));
        if (lo == hi) continue;  // no cut between equal values
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / n_left +
                            right_sum * right_sum / n_right - sum * sum / n_node;
        if (gain > best.gain) {
          best.feature = static_cast<int>(j);
          best.threshold = 0.5 * (lo + hi);
          best.gain = gain;
        }
      }
    }
    return best;
  }

  int build(SortedRows& rows, int depth) {
    double sum = 0.0;
    for (int r : rows[0]) sum += target[r];
    const double mean = sum / static_cast<double>(rows[0].size());

    SplitChoice split;
    if (depth < params.max_depth) split = best_split(rows);
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (split.feature < 0) {
      tree.nodes[static_cast<std::size_t>(id)].value = mean;
      return id;
    }
    importance_acc[split.feature] += split.gain;

    // Stable partition keeps every per-feature list sorted.
    SortedRows left(rows.size()), right(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
      left[j].reserve(rows[j].size());
      right[j].reserve(rows[j].size());
      for (int r : rows[j]) {
        (X(r, split.feature) <= split.threshold ? left[j] : right[j]).push_back(r);
      }
    }
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[static_cast<std::size_t>(id)].feature = split.feature;
    tree.nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
    const int left_id = build(left, depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = left_id;
    const int right_id = build(right, depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].right = right_id;
    return id;
  }
};

}  // namespace

TreeEnsemble gbt_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const GbtParams& params, RngSpec /*rng*/) {
  if (X.rows() != y.size()) throw std::invalid_argument("gbt_fit: dimension mismatch");
  if (params.rounds < 0) throw std::invalid_argument("gbt_fit: rounds must be >= 0");
  if (params.max_depth < 1) throw std::invalid_argument("gbt_fit: max_depth must be >= 1");
  if (params.min_leaf < 1) throw std::invalid_argument("gbt_fit: min_leaf must be >= 1");
  if (params.learning_rate <= 0.0 || params.learning_rate > 1.0) {
    throw std::invalid_argument("gbt_fit: learning_rate must be in (0, 1]");
  }

  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  TreeEnsemble ensemble;
  ensemble.learning_rate = params.learning_rate;
  ensemble.base_score = n > 0 ? y.mean() : 0.0;
  Eigen::VectorXd raw_importance = Eigen::VectorXd::Zero(p);

  Eigen::VectorXd residual = y.array() - ensemble.base_score;

  // One argsort per feature, shared by every round.
  SortedRows presorted(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    auto& order = presorted[static_cast<std::size_t>(j)];
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&X, j](int a, int b) { return X(a, j) < X(b, j); });
  }

  for (int round = 0; round < params.rounds; ++round) {
    TreeBuilder builder{X, residual, params, {}, raw_importance};
    SortedRows rows = presorted;
    builder.build(rows, 0);
    for (int i = 0; i < n; ++i) {
      residual[i] -= params.learning_rate * builder.tree.predict_row(X.row(i));
    }
    ensemble.trees.push_back(std::move(builder.tree));
  }

  const double total = raw_importance.sum();
  ensemble.importance =
      total > 0.0 ? Eigen::VectorXd(raw_importance / total) : raw_importance;
  return ensemble;
}

Eigen::VectorXd gbt_importance(const TreeEnsemble& ensemble) {
  return ensemble.importance;
}

}  // namespace cstab

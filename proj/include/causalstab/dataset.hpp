#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace cstab {

// Observational triple (X, y, z): covariate matrix, outcome, binary treatment.
struct Dataset {
  Eigen::MatrixXd X;                       // n x p
  Eigen::VectorXd y;                       // n
  Eigen::VectorXi z;                       // n, entries in {0, 1}
  std::vector<std::string> feature_names;  // p

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }

  // Throws std::invalid_argument on dimension mismatch, non-finite entries,
  // non-binary treatment, or a missing treatment arm.
  void validate() const;

  // Rows restricted to `rows` (feature names shared).
  Dataset subset(const std::vector<int>& rows) const;
};

// Sorted, duplicate-free set of feature indices.
struct SelectionSet {
  std::vector<int> indices;

  static SelectionSet of(std::vector<int> idx);
  bool contains(int j) const;
  int size() const { return static_cast<int>(indices.size()); }
  bool operator==(const SelectionSet& other) const {
    return indices == other.indices;
  }
};

struct Metrics {
  double tpr = 0.0;
  double fdr = 0.0;
  int n_selected = 0;
  int n_true_positives = 0;
};

// tpr = |selected ∩ truth| / |truth| (0 when truth is empty);
// fdr = |selected \ truth| / max(|selected|, 1).
Metrics tpr_fdr(const SelectionSet& selected, const SelectionSet& truth, int p);

struct StandardizedMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXd means;
  Eigen::VectorXd scales;  // population standard deviations
};

// Centers each column and scales to unit population variance (divide by n).
// Throws on a constant column, naming it.
StandardizedMatrix standardize_columns(const Eigen::MatrixXd& X);

// Helpers shared across modules.
Eigen::MatrixXd rows_subset(const Eigen::MatrixXd& X, const std::vector<int>& rows);
Eigen::VectorXd rows_subset(const Eigen::VectorXd& v, const std::vector<int>& rows);
Eigen::VectorXi rows_subset(const Eigen::VectorXi& v, const std::vector<int>& rows);

inline double population_variance(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size());
}

}  // namespace cstab

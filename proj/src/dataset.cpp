#include "causalstab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cstab {

void Dataset::validate() const {
  const auto rows = X.rows();
  if (y.size() != rows || z.size() != rows) {
    throw std::invalid_argument("Dataset: dimension mismatch between X, y, z");
  }
  if (feature_names.size() != static_cast<std::size_t>(X.cols())) {
    throw std::invalid_argument("Dataset: feature_names length != p");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("Dataset: non-finite entry");
  }
  int treated = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z[i] != 0 && z[i] != 1) {
      throw std::invalid_argument("Dataset: treatment not binary");
    }
    treated += z[i];
  }
  if (treated == 0 || treated == z.size()) {
    throw std::invalid_argument("Dataset: needs at least one treated and one control unit");
  }
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.X = rows_subset(X, rows);
  out.y = rows_subset(y, rows);
  out.z = rows_subset(z, rows);
  out.feature_names = feature_names;
  return out;
}

SelectionSet SelectionSet::of(std::vector<int> idx) {
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return SelectionSet{std::move(idx)};
}

bool SelectionSet::contains(int j) const {
  return std::binary_search(indices.begin(), indices.end(), j);
}

Metrics tpr_fdr(const SelectionSet& selected, const SelectionSet& truth, int p) {
  for (int j : selected.indices) {
    if (j < 0 || j >= p) throw std::invalid_argument("tpr_fdr: selected index out of range");
  }
  for (int j : truth.indices) {
    if (j < 0 || j >= p) throw std::invalid_argument("tpr_fdr: truth index out of range");
  }
  int tp = 0;
  for (int j : selected.indices) tp += truth.contains(j) ? 1 : 0;
  Metrics m;
  m.n_selected = selected.size();
  m.n_true_positives = tp;
  m.tpr = truth.size() == 0 ? 0.0 : static_cast<double>(tp) / truth.size();
  m.fdr = static_cast<double>(m.n_selected - tp) / std::max(m.n_selected, 1);
  return m;
}

StandardizedMatrix standardize_columns(const Eigen::MatrixXd& X) {
  const auto n = X.rows();
  const auto p = X.cols();
  StandardizedMatrix out;
  out.X.resize(n, p);
  out.means.resize(p);
  out.scales.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = X.col(j).mean();
    const double var = (X.col(j).array() - mean).square().sum() / static_cast<double>(n);
    if (!(var > 0.0)) {
      throw std::invalid_argument("standardize_columns: column " + std::to_string(j) +
                                  " has zero variance");
    }
    const double sd = std::sqrt(var);
    out.means[j] = mean;
    out.scales[j] = sd;
    out.X.col(j) = (X.col(j).array() - mean) / sd;
  }
  return out;
}

Eigen::MatrixXd rows_subset(const Eigen::MatrixXd& X, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return out;
}

Eigen::VectorXd rows_subset(const Eigen::VectorXd& v, const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[rows[i]];
  return out;
}

Eigen::VectorXi rows_subset(const Eigen::VectorXi& v, const std::vector<int>& rows) {
  Eigen::VectorXi out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[rows[i]];
  return out;
}

}  // namespace cstab

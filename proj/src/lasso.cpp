#include "causalstab/lasso.hpp"

#include <cmath>
#include <stdexcept>

namespace cstab {

namespace {

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(X.rows());
  Eigen::VectorXd yc = y.array() - y.mean();
  return (X.transpose() * yc).cwiseAbs().maxCoeff() / n;
}

RegularizationPath lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& lambdas, double tol,
                              int max_sweeps) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  const int G = static_cast<int>(lambdas.size());
  if (y.size() != n) throw std::invalid_argument("lasso_path: dimension mismatch");
  if (G == 0) throw std::invalid_argument("lasso_path: empty lambda sequence");
  for (int g = 0; g < G; ++g) {
    if (lambdas[g] <= 0) throw std::invalid_argument("lasso_path: lambdas must be positive");
    if (g > 0 && lambdas[g] >= lambdas[g - 1]) {
      throw std::invalid_argument("lasso_path: lambdas must be strictly decreasing");
    }
  }
  const double dn = static_cast<double>(n);
  Eigen::VectorXd col_mean = X.colwise().mean();
  for (int j = 0; j < p; ++j) {
    const double var = (X.col(j).array() - col_mean[j]).square().sum() / dn;
    if (std::abs(var - 1.0) > 1e-6) {
      throw std::invalid_argument("lasso_path: column " + std::to_string(j) +
                                  " not standardized (population variance " +
                                  std::to_string(var) + ")");
    }
  }

  // Work on centered data; the intercept is just mean(y) because the
  // columns are centered.
  Eigen::MatrixXd Xc = X.rowwise() - col_mean.transpose();
  const double y_mean = y.mean();
  Eigen::VectorXd residual = y.array() - y_mean;
  Eigen::VectorXd col_sq(p);  // x_j'x_j / n, ~1 after standardization
  for (int j = 0; j < p; ++j) col_sq[j] = Xc.col(j).squaredNorm() / dn;

  RegularizationPath path;
  path.lambdas = lambdas;
  path.coefficients = Eigen::MatrixXd::Zero(G, p);
  path.active_sets.resize(static_cast<std::size_t>(G));
  path.intercept = y_mean;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int g = 0; g < G; ++g) {
    const double lambda = lambdas[g];
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      double max_change = 0.0;
      for (int j = 0; j < p; ++j) {
        const double old = beta[j];
        const double rho = Xc.col(j).dot(residual) / dn + col_sq[j] * old;
        const double updated = soft_threshold(rho, lambda) / col_sq[j];
        if (updated != old) {
          residual -= (updated - old) * Xc.col(j);
          beta[j] = updated;
          max_change = std::max(max_change, std::abs(updated - old));
        }
      }
      if (max_change < tol) break;
    }
    path.coefficients.row(g) = beta.transpose();
    std::vector<int> active;
    for (int j = 0; j < p; ++j) {
      if (beta[j] != 0.0) active.push_back(j);
    }
    path.active_sets[static_cast<std::size_t>(g)] = SelectionSet::of(std::move(active));
  }
  return path;
}

}  // namespace cstab

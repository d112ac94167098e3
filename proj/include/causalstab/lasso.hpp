#pragma once

#include <Eigen/Dense>
#include <vector>

#include "causalstab/dataset.hpp"

namespace cstab {

// Lasso solutions along a decreasing lambda sequence. Coefficients are on
// the standardized-X scale; predictions add the intercept (mean of y).
struct RegularizationPath {
  Eigen::VectorXd lambdas;      // strictly decreasing, positive
  Eigen::MatrixXd coefficients; // |lambdas| x p
  std::vector<SelectionSet> active_sets;
  double intercept = 0.0;
};

// Smallest lambda with an empty active set: max_j |x_j'(y - mean(y))| / n.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Cyclic coordinate descent with warm starts on the objective
//   (1/2n) ||y - b0 - X b||^2 + lambda ||b||_1.
// Requires standardized columns (unit population variance, checked to 1e-6);
// a sweep ends when the largest coefficient change is below tol.
RegularizationPath lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& lambdas, double tol = 1e-7,
                              int max_sweeps = 1000);

}  // namespace cstab

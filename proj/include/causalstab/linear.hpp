#pragma once

#include <Eigen/Dense>

#include "causalstab/rng.hpp"

namespace cstab {

struct LinearModel {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double penalty = 0.0;

  double predict(const Eigen::VectorXd& x) const {
    return intercept + coefficients.dot(x);
  }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    return (X * coefficients).array() + intercept;
  }
};

// Solves (Xc'Xc + penalty I) b = Xc'yc on centered data; the intercept
// restores the means and is never shrunk. penalty = 0 requires a
// nonsingular centered Gram matrix.
LinearModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      double penalty);

// k-fold cross-validation over penalty_grid, refit on the full data at the
// winner. CV error is the pooled squared error over validation points; ties
// break toward the larger penalty.
LinearModel ridge_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& penalty_grid, int k, RngSpec rng);

// L2-penalized logistic regression by damped Newton iterations; the
// intercept is unpenalized. Stops when the penalized log-likelihood
// gradient norm falls below 1e-8; throws after max_iter iterations.
LinearModel logistic_fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& z,
                         double l2, int max_iter = 100);

inline Eigen::VectorXd logistic_probability(const LinearModel& model,
                                            const Eigen::MatrixXd& X) {
  Eigen::VectorXd s = model.predict(X);
  return (1.0 / (1.0 + (-s.array()).exp())).matrix();
}

}  // namespace cstab

#include "causalstab/linear.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cstab {

namespace {

struct Centered {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd x_means;
  double y_mean = 0.0;
};

Centered center(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Centered c;
  c.x_means = X.colwise().mean();
  c.X = X.rowwise() - c.x_means.transpose();
  c.y_mean = y.mean();
  c.y = y.array() - c.y_mean;
  return c;
}

LinearModel solve_ridge(const Centered& c, double penalty) {
  Eigen::MatrixXd gram = c.X.transpose() * c.X;
  gram.diagonal().array() += penalty;
  Eigen::VectorXd rhs = c.X.transpose() * c.y;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (penalty == 0.0 && gram.size() > 0) {
    const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
    if (pivots.minCoeff() <= 1e-10 * pivots.maxCoeff()) {
      throw std::runtime_error("ridge_fit: singular system (penalty 0 on rank-deficient data)");
    }
  }
  Eigen::VectorXd beta = ldlt.solve(rhs);
  const double scale = gram.norm() * beta.norm() + rhs.norm() + 1e-300;
  if (!beta.allFinite() || (gram * beta - rhs).norm() > 1e-8 * scale) {
    throw std::runtime_error("ridge_fit: linear solve failed");
  }
  LinearModel model;
  model.coefficients = beta;
  model.intercept = c.y_mean - c.x_means.dot(beta);
  model.penalty = penalty;
  return model;
}

}  // namespace

LinearModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double penalty) {
  if (X.rows() != y.size()) throw std::invalid_argument("ridge_fit: dimension mismatch");
  if (penalty < 0) throw std::invalid_argument("ridge_fit: penalty must be >= 0");
  return solve_ridge(center(X, y), penalty);
}

LinearModel ridge_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& penalty_grid, int k, RngSpec rng) {
  const int n = static_cast<int>(X.rows());
  if (penalty_grid.size() == 0) throw std::invalid_argument("ridge_cv: empty penalty grid");
  if (k < 2) throw std::invalid_argument("ridge_cv: k must be >= 2");
  if (n < k) throw std::invalid_argument("ridge_cv: n < k");

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng gen(rng);
  gen.shuffle(order);

  Eigen::VectorXd total_sq_err = Eigen::VectorXd::Zero(penalty_grid.size());
  for (int fold = 0; fold < k; ++fold) {
    std::vector<int> train_rows, valid_rows;
    for (int i = 0; i < n; ++i) {
      (i % k == fold ? valid_rows : train_rows).push_back(order[static_cast<std::size_t>(i)]);
    }
    Eigen::MatrixXd Xt(train_rows.size(), X.cols());
    Eigen::VectorXd yt(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      Xt.row(static_cast<Eigen::Index>(i)) = X.row(train_rows[i]);
      yt[static_cast<Eigen::Index>(i)] = y[train_rows[i]];
    }
    // One centering + Gram per fold; each penalty is a cheap re-solve.
    Centered c = center(Xt, yt);
    Eigen::MatrixXd gram = c.X.transpose() * c.X;
    Eigen::VectorXd rhs = c.X.transpose() * c.y;
    for (Eigen::Index g = 0; g < penalty_grid.size(); ++g) {
      Eigen::MatrixXd reg = gram;
      reg.diagonal().array() += penalty_grid[g];
      Eigen::VectorXd beta = Eigen::LDLT<Eigen::MatrixXd>(reg).solve(rhs);
      const double intercept = c.y_mean - c.x_means.dot(beta);
      for (int r : valid_rows) {
        const double err = y[r] - (X.row(r).dot(beta) + intercept);
        total_sq_err[g] += err * err;
      }
    }
  }

  Eigen::Index best = 0;
  for (Eigen::Index g = 1; g < penalty_grid.size(); ++g) {
    const bool better = total_sq_err[g] < total_sq_err[best];
    const bool tie_larger = total_sq_err[g] == total_sq_err[best] &&
                            penalty_grid[g] > penalty_grid[best];
    if (better || tie_larger) best = g;
  }
  return ridge_fit(X, y, penalty_grid[best]);
}

LinearModel logistic_fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& z,
                         double l2, int max_iter) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (z.size() != n) throw std::invalid_argument("logistic_fit: dimension mismatch");
  if (l2 < 0) throw std::invalid_argument("logistic_fit: l2 must be >= 0");
  const int ones = z.sum();
  if (ones == 0 || ones == n) {
    throw std::invalid_argument("logistic_fit: both classes must be present");
  }

  // Last parameter is the (unpenalized) intercept.
  Eigen::MatrixXd D(n, p + 1);
  if (p > 0) D.leftCols(p) = X;
  D.col(p).setOnes();
  Eigen::VectorXd zd = z.cast<double>();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);

  auto penalized_ll = [&](const Eigen::VectorXd& t) {
    Eigen::VectorXd s = D * t;
    // log(1 + e^s) computed stably.
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      const double si = s[i];
      const double softplus = si > 0 ? si + std::log1p(std::exp(-si)) : std::log1p(std::exp(si));
      ll += zd[i] * si - softplus;
    }
    return ll - 0.5 * l2 * t.head(p).squaredNorm();
  };

  double ll = penalized_ll(theta);
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd s = D * theta;
    Eigen::VectorXd prob = (1.0 / (1.0 + (-s.array()).exp())).matrix();
    Eigen::VectorXd grad = D.transpose() * (zd - prob);
    grad.head(p) -= l2 * theta.head(p);
    if (grad.norm() <= 1e-8) {
      LinearModel model;
      model.coefficients = theta.head(p);
      model.intercept = theta[p];
      model.penalty = l2;
      return model;
    }
    Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
    Eigen::MatrixXd hess = D.transpose() * w.asDiagonal() * D;
    hess.diagonal().head(p).array() += l2;
    hess.diagonal().array() += 1e-12;  // keeps the solve well-posed at extreme fits
    Eigen::VectorXd direction = Eigen::LDLT<Eigen::MatrixXd>(hess).solve(grad);
    double step = 1.0;
    Eigen::VectorXd proposal = theta + direction;
    double next_ll = penalized_ll(proposal);
    int halvings = 0;
    while (next_ll < ll && halvings < 40) {
      step *= 0.5;
      proposal = theta + step * direction;
      next_ll = penalized_ll(proposal);
      ++halvings;
    }
    theta = proposal;
    ll = next_ll;
  }
  throw std::runtime_error("logistic_fit: no convergence after " + std::to_string(max_iter) +
                           " iterations");
}

}  // namespace cstab

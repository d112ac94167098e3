#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "causalstab/dataset.hpp"
#include "causalstab/gbt.hpp"
#include "causalstab/linear.hpp"
#include "causalstab/rng.hpp"

namespace cstab {

enum class CateMethod { T, X, DR };
enum class BaseLearner { Ridge, Gbt };

CateMethod parse_cate_method(const std::string& s);
BaseLearner parse_base_learner(const std::string& s);

// Propensity is either known by design (e.g. a randomized trial) or
// estimated with penalized logistic regression.
struct PropensitySpec {
  bool known = false;
  double value = 0.5;

  static PropensitySpec known_value(double e0) { return {true, e0}; }
  static PropensitySpec estimated() { return {false, 0.5}; }
};

struct ClipRange {
  double low = 0.01;
  double high = 0.99;
};

// Hyperparameters for the supervised learners backing nuisance and CATE fits.
// The ridge grid tops out at 10: heavier shrinkage on standardized features
// bleeds signal coefficients onto correlated neighbors, which the selection
// layer then picks up as persistent false positives.
struct LearnerConfig {
  Eigen::VectorXd ridge_penalties =
      (Eigen::VectorXd(5) << 1e-3, 1e-2, 1e-1, 1.0, 10.0).finished();
  int ridge_cv_folds = 5;
  GbtParams gbt;
  double logistic_l2 = 1.0;
};

using RegressorFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

// Fitted outcome regressions per arm plus a propensity function whose
// outputs are always inside [clip.low, clip.high].
struct NuisanceModels {
  RegressorFn m0;
  RegressorFn m1;
  RegressorFn e;
  ClipRange clip;
};

struct FoldAssignment {
  std::vector<int> fold_of;  // values in {0..k-1}
  int k = 0;

  std::vector<std::vector<int>> folds() const;
};

// Uniformly random balanced partition; fold sizes differ by at most one.
FoldAssignment kfold_split(int n, int k, RngSpec rng);

struct CateSpec {
  CateMethod method = CateMethod::DR;
  BaseLearner base = BaseLearner::Ridge;
  PropensitySpec propensity = PropensitySpec::known_value(0.5);
  ClipRange clip;
  int dr_folds = 2;               // internal nuisance cross-fit for the DR stage
  bool winsorize_pseudo = false;  // clamp DR pseudo-outcomes at the 1st/99th percentiles
  LearnerConfig learners;

  // When set, "fitting" ignores the training data and this function is the
  // CATE; used for oracle checks and validator stubs.
  RegressorFn fixed_tau;
};

struct CateModel {
  CateMethod method = CateMethod::DR;
  BaseLearner base = BaseLearner::Ridge;
  int n_features = 0;
  RegressorFn tau;
};

// Supervised regression behind every nuisance and CATE stage: cross-validated
// ridge or boosted trees, returned as a prediction closure.
RegressorFn fit_regressor(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          BaseLearner base, const LearnerConfig& learners, RngSpec rng);

// m1 fits treated rows only, m0 control rows only; e is the clipped constant
// when known, else clipped penalized-logistic predictions on all rows.
NuisanceModels fit_nuisances(const Dataset& data, BaseLearner base,
                             const PropensitySpec& propensity, ClipRange clip,
                             RngSpec rng, const LearnerConfig& learners = {});

// AIPW residual form:
//   phi_i = (z_i - e_i) / (e_i (1 - e_i)) * (y_i - m_{z_i}(x_i)) + m1(x_i) - m0(x_i).
Eigen::VectorXd dr_pseudo_outcomes(const Dataset& data, const NuisanceModels& nuisances);

CateModel fit_cate(const Dataset& train, const CateSpec& spec, RngSpec rng);

Eigen::VectorXd predict_cate(const CateModel& model, const Eigen::MatrixXd& X);

// Clamps v to its empirical [lo, hi] quantiles (linear-interpolation type).
Eigen::VectorXd winsorize(const Eigen::VectorXd& v, double lo = 0.01, double hi = 0.99);

}  // namespace cstab

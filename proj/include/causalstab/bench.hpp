#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "causalstab/cate.hpp"
#include "causalstab/dataset.hpp"
#include "causalstab/ipss.hpp"
#include "causalstab/simgen.hpp"
#include "causalstab/stabsel.hpp"

namespace cstab {

enum class MethodKind {
  CausalStabsel,   // cross-fitted subsampling + IPSS scoring
  OracleIpss,      // true CATE values as the selector response
  NaiveIpss,       // pseudo-outcomes computed once, then plain IPSS
  LassoCv,         // nonzero coefficients at the CV-chosen penalty
  BhOls,           // BH on OLS p-values of the pseudo-outcome regression
  TopkImportance,  // top-|E| features by tree importance
};

struct MethodSpec {
  std::string name;
  MethodKind kind = MethodKind::CausalStabsel;
  SelectorKind selector = SelectorKind::LassoPath;
  CateSpec cate;            // per-subsample estimator, or the pseudo-outcome estimator
  int B = 100;
  double m_fraction = 0.5;  // subsample size = floor(m_fraction * n)
  double delta = 1.0;
  double q_cap_fraction = 0.5;
  int grid_size = 25;
  int pseudo_folds = 5;       // K for pseudo-outcome cross-fitting
  bool honest_split = false;  // single split instead of K-fold pseudo-outcomes
  bool univariate_bh = false; // per-feature OLS instead of the joint regression
  GbtParams selector_gbt;
  int topk = -1;  // TopkImportance: -1 means |E| from the trial's truth
};

struct TrialRecord {
  int trial_id = 0;
  int p = 0;
  SelectionSet truth;
  // selections[method] aligned with ExperimentSpec::alphas.
  std::map<std::string, std::vector<SelectionSet>> selections;
  std::map<std::string, double> seconds;
  std::map<std::string, std::string> failures;  // method -> error message
};

struct ExperimentSpec {
  SimConfig sim;
  std::vector<MethodSpec> methods;
  std::vector<double> alphas = {0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5};
  int trials = 200;
  RngSpec seed;
  unsigned threads = 1;
  // Called after each finished trial (from worker threads; keep it cheap).
  std::function<void(const TrialRecord&)> on_trial;
};

struct ResultRow {
  std::string method;
  double alpha = 0.0;
  double mean_tpr = 0.0;
  double se_tpr = 0.0;
  double mean_fdr = 0.0;
  double se_fdr = 0.0;
  double mean_selected = 0.0;
  int trials = 0;
};

struct ExperimentResult {
  std::vector<TrialRecord> records;
  std::vector<ResultRow> table;
};

// Generates one dataset per trial, runs every method at every alpha, and
// aggregates TPR/FDR means with Monte Carlo standard errors. A method
// failing in more than 20% of trials aborts the run.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Recomputes the aggregate table from raw records (used by tests and the
// CSV writer; run_experiment calls this internally).
std::vector<ResultRow> aggregate_records(const std::vector<TrialRecord>& records,
                                         const std::vector<MethodSpec>& methods,
                                         const std::vector<double>& alphas);

void write_results_csv(const std::string& path, const std::vector<ResultRow>& table);
std::vector<ResultRow> read_results_csv(const std::string& path);

// K-fold cross-fitted pseudo-outcomes: for each fold, the CATE model is fit
// on the other folds and evaluated on the fold. Returns (X, phi-hat).
std::pair<Eigen::MatrixXd, Eigen::VectorXd> crossfit_pseudo_dataset(const Dataset& data,
                                                                    int k,
                                                                    const CateSpec& cate,
                                                                    RngSpec rng);

// Honest-split variant: fit on one half, predict on the other; only the
// held-out half (returned row indices) carries pseudo-outcomes.
struct HonestPseudo {
  Eigen::MatrixXd X;
  Eigen::VectorXd phi;
  std::vector<int> rows;
};
HonestPseudo honest_split_pseudo_dataset(const Dataset& data, const CateSpec& cate, RngSpec rng);

// Benjamini-Hochberg step-up at level alpha.
SelectionSet bh_select(const Eigen::VectorXd& pvalues, double alpha);

// Indices of the k largest scores; ties break toward the lower index.
SelectionSet topk_importance_select(const Eigen::VectorXd& importance, int k);

// Classical t-test p-values: joint OLS of y on all columns (plus intercept),
// or per-feature simple regressions when univariate is set.
Eigen::VectorXd ols_pvalues(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            bool univariate = false);

// Lasso with k-fold cross-validated penalty; returns the active set of the
// full-data refit at the chosen penalty.
SelectionSet lasso_cv_select(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k,
                             RngSpec rng, int grid_size = 30);

// --- Monte Carlo validators -------------------------------------------------

struct BoundCheckRow {
  int feature = 0;
  double lambda = 0.0;
  double emp_var = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  bool violated = false;
};

struct BoundCheckReport {
  std::vector<BoundCheckRow> rows;
  int violations = 0;
  double bound = 0.0;  // 1/(8B) + m^2/n
  bool pass() const { return violations == 0; }
};

struct VarianceBoundConfig {
  SimConfig sim;
  int B = 25;
  int m = 50;
  int replications = 200;
  int grid_size = 15;
  SelectorKind selector = SelectorKind::LassoPath;
  unsigned threads = 1;
  RngSpec seed;
};

// R replications of oracle selection probabilities on fresh data (fixed
// truth, fixed grid); per-(feature, lambda) empirical variance checked
// against 1/(8B) + m^2/n plus 3-SE Monte Carlo slack.
BoundCheckReport validate_variance_bound(const VarianceBoundConfig& config);

void write_bound_csv(const std::string& path, const BoundCheckReport& report);

struct BiasDecayConfig {
  SimConfig sim;  // n is overridden by n_small / n_large
  int n_small = 250;
  int n_large = 1000;
  int m = 50;
  int B = 25;
  int reference_B = 100;
  int reference_replications = 20;
  int replications = 100;
  int grid_size = 15;
  SelectorKind selector = SelectorKind::LassoPath;
  CateSpec cate;           // ignored when use_true_tau
  bool use_true_tau = false;
  unsigned threads = 1;
  RngSpec seed;
};

struct BiasDecayReport {
  int n_small = 0;
  int n_large = 0;
  double gap_small = 0.0;
  double se_small = 0.0;
  double gap_large = 0.0;
  double se_large = 0.0;
  // The larger sample may not beat the smaller one by more than MC noise.
  bool pass() const {
    return gap_large <= gap_small + 2.0 * std::sqrt(se_small * se_small + se_large * se_large);
  }
};

// Mean |pi-hat - reference oracle| over true modifiers at lambda_min, for two
// sample sizes sharing m, the truth, and the grid. The reference curve pools
// many oracle replications; the gap must not grow with n.
BiasDecayReport validate_bias_decay(const BiasDecayConfig& config);

void write_bias_csv(const std::string& path, const BiasDecayReport& report);

struct EfpCalibrationConfig {
  SimConfig sim;
  MethodSpec method;  // a CausalStabsel-style descriptor
  std::vector<double> targets = {0.5, 1.0, 2.0};
  int trials = 100;
  unsigned threads = 1;
  RngSpec seed;
};

struct EfpCalibrationReport {
  std::vector<double> targets;
  std::vector<double> mean_fp;
  std::vector<double> se_fp;
  bool pass() const;  // mean FP <= t + 2 SE for every target
};

// Empirical check of the expected-false-positive bound: the realized false
// positive count under select_at_target(t), averaged over trials.
EfpCalibrationReport validate_efp_calibration(const EfpCalibrationConfig& config);

void write_efp_calibration_csv(const std::string& path, const EfpCalibrationReport& report);

}  // namespace cstab

#pragma once

#include <Eigen/Dense>
#include <utility>

#include "causalstab/dataset.hpp"
#include "causalstab/rng.hpp"

namespace cstab {

enum class SimSetting { Linear, Nonlinear };

SimSetting parse_sim_setting(const std::string& s);

struct SimConfig {
  int n = 1000;
  int p = 100;
  int n_modifiers = 10;
  int n_prognostic = 10;
  int n_confounders = 0;
  double rho = 0.5;
  double snr = 1.0;
  double a = 1.0;  // relative prognostic strength
  SimSetting setting = SimSetting::Linear;
  RngSpec seed;

  void validate() const;

  static SimConfig linear_default();     // n=1000, p=100, |E|=|P|=10
  static SimConfig nonlinear_default();  // n=1000, p=50,  |E|=|P|=5
};

struct GroundTruth {
  SelectionSet modifiers;    // E
  SelectionSet prognostic;   // P
  SelectionSet confounders;  // C
  Eigen::VectorXd beta;      // support = P, magnitudes in [0.5, 1]
  Eigen::VectorXd gamma;     // support = E
  double sigma2 = 0.0;       // filled once the realized signal is known
};

struct SimulatedDataset {
  Dataset data;
  GroundTruth truth;
  Eigen::VectorXd mu;          // standardized prognostic values
  Eigen::VectorXd tau;         // standardized CATE values
  Eigen::VectorXd propensity;
  Eigen::VectorXd epsilon;     // realized noise, y = a*mu + z.*tau + epsilon
};

// Rows iid N(0, Sigma) with Sigma_ij = rho^|i-j|, built from the Cholesky
// factor; no column standardization.
Eigen::MatrixXd toeplitz_gaussian_raw(int n, int p, double rho, RngSpec rng);

// Same draw with columns standardized to mean zero, unit population variance.
Eigen::MatrixXd toeplitz_gaussian(int n, int p, double rho, RngSpec rng);

// E, P, C drawn uniformly without replacement, mutually independent (overlap
// allowed); nonzero coefficients uniform on [-1, -0.5] U [0.5, 1].
GroundTruth draw_truth(const SimConfig& config, RngSpec rng);

// Linear: mu = X beta, tau = X gamma. Nonlinear: sums of exp(-x_j^2 / 8)
// over P and E. Both centered and scaled to unit population variance;
// throws if either has zero variance.
std::pair<Eigen::VectorXd, Eigen::VectorXd> eval_mu_tau(const Eigen::MatrixXd& X,
                                                        const GroundTruth& truth,
                                                        SimSetting setting);

// No confounders: propensity 1/2. Otherwise logistic in the confounder sum.
std::pair<Eigen::VectorXi, Eigen::VectorXd> assign_treatment(const Eigen::MatrixXd& X,
                                                             const SelectionSet& confounders,
                                                             RngSpec rng);

// sigma2 = Var(a*mu + z.*tau) / snr, variance computed on the realized signal.
double calibrate_noise(const Eigen::VectorXd& mu, const Eigen::VectorXd& tau,
                       const Eigen::VectorXi& z, double a, double snr);

SimulatedDataset generate(const SimConfig& config);

// Same composition with a caller-supplied truth (validators hold the truth
// fixed across replications). Streams: 0 covariates, 2 treatment, 3 noise.
SimulatedDataset generate_with_truth(const SimConfig& config, const GroundTruth& truth,
                                     RngSpec rng);

// Dumps <base>_data.csv (the observed triple) and <base>_truth.csv
// (per-feature coefficients and set membership, noise variance) for
// external tooling.
void dump_simulated_csv(const std::string& base_path, const SimulatedDataset& sim);

}  // namespace cstab

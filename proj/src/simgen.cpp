#include "causalstab/simgen.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "causalstab/csv.hpp"

namespace cstab {

SimSetting parse_sim_setting(const std::string& s) {
  if (s == "linear") return SimSetting::Linear;
  if (s == "nonlinear") return SimSetting::Nonlinear;
  throw std::invalid_argument("unknown simulation setting: " + s);
}

void SimConfig::validate() const {
  if (n < 4) throw std::invalid_argument("SimConfig: n must be >= 4");
  if (p < 1) throw std::invalid_argument("SimConfig: p must be >= 1");
  if (n_modifiers < 0 || n_modifiers > p) throw std::invalid_argument("SimConfig: bad n_modifiers");
  if (n_prognostic < 0 || n_prognostic > p) throw std::invalid_argument("SimConfig: bad n_prognostic");
  if (n_confounders < 0 || n_confounders > p) throw std::invalid_argument("SimConfig: bad n_confounders");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("SimConfig: rho must lie in [0, 1)");
  if (!(snr > 0.0)) throw std::invalid_argument("SimConfig: snr must be positive");
  if (a < 0.0) throw std::invalid_argument("SimConfig: a must be >= 0");
}

SimConfig SimConfig::linear_default() {
  SimConfig c;
  c.setting = SimSetting::Linear;
  return c;
}

SimConfig SimConfig::nonlinear_default() {
  SimConfig c;
  c.setting = SimSetting::Nonlinear;
  c.p = 50;
  c.n_modifiers = 5;
  c.n_prognostic = 5;
  return c;
}

Eigen::MatrixXd toeplitz_gaussian_raw(int n, int p, double rho, RngSpec rng) {
  if (!(std::abs(rho) < 1.0)) {
    throw std::invalid_argument("toeplitz_gaussian: |rho| must be < 1");
  }
  Eigen::MatrixXd sigma(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(rho, std::abs(i - j));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("toeplitz_gaussian: Cholesky factorization failed");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  Rng gen(rng);
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd g(p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) g[j] = gen.normal();
    X.row(i) = (L * g).transpose();
  }
  return X;
}

Eigen::MatrixXd toeplitz_gaussian(int n, int p, double rho, RngSpec rng) {
  return standardize_columns(toeplitz_gaussian_raw(n, p, rho, rng)).X;
}

GroundTruth draw_truth(const SimConfig& config, RngSpec rng) {
  config.validate();
  Rng gen(rng);
  GroundTruth truth;
  truth.modifiers = SelectionSet{gen.sample_without_replacement(config.p, config.n_modifiers)};
  truth.prognostic = SelectionSet{gen.sample_without_replacement(config.p, config.n_prognostic)};
  truth.confounders = SelectionSet{gen.sample_without_replacement(config.p, config.n_confounders)};
  auto draw_coef = [&gen]() {
    const double magnitude = gen.uniform(0.5, 1.0);
    return gen.bernoulli(0.5) ? magnitude : -magnitude;
  };
  truth.beta = Eigen::VectorXd::Zero(config.p);
  for (int j : truth.prognostic.indices) truth.beta[j] = draw_coef();
  truth.gamma = Eigen::VectorXd::Zero(config.p);
  for (int j : truth.modifiers.indices) truth.gamma[j] = draw_coef();
  return truth;
}

namespace {

Eigen::VectorXd standardize_signal(Eigen::VectorXd v, const char* label) {
  const double mean = v.mean();
  v.array() -= mean;
  const double var = v.squaredNorm() / static_cast<double>(v.size());
  if (!(var > 0.0)) {
    throw std::invalid_argument(std::string("eval_mu_tau: ") + label + " has zero variance");
  }
  return v / std::sqrt(var);
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> eval_mu_tau(const Eigen::MatrixXd& X,
                                                        const GroundTruth& truth,
                                                        SimSetting setting) {
  const int n = static_cast<int>(X.rows());
  Eigen::VectorXd mu, tau;
  if (setting == SimSetting::Linear) {
    mu = X * truth.beta;
    tau = X * truth.gamma;
  } else {
    mu = Eigen::VectorXd::Zero(n);
    tau = Eigen::VectorXd::Zero(n);
    for (int j : truth.prognostic.indices) {
      mu.array() += (-X.col(j).array().square() / 8.0).exp();
    }
    for (int j : truth.modifiers.indices) {
      tau.array() += (-X.col(j).array().square() / 8.0).exp();
    }
  }
  return {standardize_signal(std::move(mu), "mu"),
          standardize_signal(std::move(tau), "tau")};
}

std::pair<Eigen::VectorXi, Eigen::VectorXd> assign_treatment(const Eigen::MatrixXd& X,
                                                             const SelectionSet& confounders,
                                                             RngSpec rng) {
  const int n = static_cast<int>(X.rows());
  Eigen::VectorXd propensity(n);
  if (confounders.size() == 0) {
    propensity.setConstant(0.5);
  } else {
    Eigen::VectorXd score = Eigen::VectorXd::Zero(n);
    for (int j : confounders.indices) score += X.col(j);
    propensity = (1.0 / (1.0 + (-score.array()).exp())).matrix();
  }
  Rng gen(rng);
  Eigen::VectorXi z(n);
  for (int i = 0; i < n; ++i) z[i] = gen.bernoulli(propensity[i]) ? 1 : 0;
  return {std::move(z), std::move(propensity)};
}

double calibrate_noise(const Eigen::VectorXd& mu, const Eigen::VectorXd& tau,
                       const Eigen::VectorXi& z, double a, double snr) {
  if (!(snr > 0.0)) throw std::invalid_argument("calibrate_noise: snr must be positive");
  Eigen::VectorXd signal = a * mu + z.cast<double>().cwiseProduct(tau);
  const double var = population_variance(signal);
  if (!(var > 0.0)) throw std::invalid_argument("calibrate_noise: zero signal variance");
  return var / snr;
}

void dump_simulated_csv(const std::string& base_path, const SimulatedDataset& sim) {
  write_csv(base_path + "_data.csv", sim.data);
  std::ofstream truth(base_path + "_truth.csv");
  if (!truth) {
    throw std::runtime_error("dump_simulated_csv: cannot write " + base_path + "_truth.csv");
  }
  truth << "feature,beta,gamma,modifier,prognostic,confounder,sigma2\n";
  for (int j = 0; j < sim.data.p(); ++j) {
    truth << sim.data.feature_names[static_cast<std::size_t>(j)] << ','
          << format_double(sim.truth.beta[j]) << ',' << format_double(sim.truth.gamma[j])
          << ',' << (sim.truth.modifiers.contains(j) ? 1 : 0) << ','
          << (sim.truth.prognostic.contains(j) ? 1 : 0) << ','
          << (sim.truth.confounders.contains(j) ? 1 : 0) << ','
          << format_double(sim.truth.sigma2) << '\n';
  }
}

SimulatedDataset generate(const SimConfig& config) {
  config.validate();
  return generate_with_truth(config, draw_truth(config, config.seed.substream(1)),
                             config.seed);
}

SimulatedDataset generate_with_truth(const SimConfig& config, const GroundTruth& truth,
                                     RngSpec rng) {
  config.validate();
  SimulatedDataset out;
  out.truth = truth;
  out.data.X = toeplitz_gaussian(config.n, config.p, config.rho, rng.substream(0));
  std::tie(out.mu, out.tau) = eval_mu_tau(out.data.X, out.truth, config.setting);
  auto [z, propensity] = assign_treatment(out.data.X, out.truth.confounders,
                                          rng.substream(2));
  out.data.z = std::move(z);
  out.propensity = std::move(propensity);
  out.truth.sigma2 = calibrate_noise(out.mu, out.tau, out.data.z, config.a, config.snr);

  Rng noise(rng.substream(3));
  const double sd = std::sqrt(out.truth.sigma2);
  out.epsilon.resize(config.n);
  for (int i = 0; i < config.n; ++i) out.epsilon[i] = noise.normal(0.0, sd);
  out.data.y = config.a * out.mu + out.data.z.cast<double>().cwiseProduct(out.tau) + out.epsilon;

  out.data.feature_names.resize(static_cast<std::size_t>(config.p));
  for (int j = 0; j < config.p; ++j) {
    out.data.feature_names[static_cast<std::size_t>(j)] = "x" + std::to_string(j + 1);
  }
  out.data.validate();
  return out;
}

}  // namespace cstab

// Acceptance suite: end-to-end statistical checks at fixed seeds, one
// pass/fail line per criterion. Exits nonzero if any criterion fails.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "causalstab/bench.hpp"
#include "causalstab/cli.hpp"
#include "causalstab/ipss.hpp"
#include "causalstab/lasso.hpp"
#include "causalstab/parallel.hpp"
#include "causalstab/simgen.hpp"
#include "causalstab/stats.hpp"

using namespace cstab;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s — %s\n", pass ? "PASS" : "FAIL", number, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

SimConfig scaled_linear(int n) {
  SimConfig sim = SimConfig::linear_default();
  sim.n = n;
  sim.p = 50;
  sim.n_modifiers = 5;
  sim.n_prognostic = 5;
  return sim;
}

const ResultRow& row_at(const std::vector<ResultRow>& table, const std::string& method,
                        double alpha) {
  for (const auto& row : table) {
    if (row.method == method && std::abs(row.alpha - alpha) < 1e-12) return row;
  }
  throw std::runtime_error("missing table row: " + method);
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Criterion 1: oracle recovery on the scaled linear design.
void criterion_oracle_recovery(unsigned threads) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentSpec spec;
  spec.sim = scaled_linear(500);
  spec.trials = 50;
  spec.alphas = {0.1, 0.2};
  spec.seed = RngSpec{1001, 0};
  spec.threads = threads;
  MethodContext context;
  context.B = 50;
  context.stabsel_cate.propensity = PropensitySpec::known_value(0.5);
  spec.methods = {make_method("oracle_ipss", context)};

  ExperimentResult result = run_experiment(spec);
  bool pass = true;
  std::string detail;
  for (double alpha : spec.alphas) {
    const ResultRow& row = row_at(result.table, "oracle_ipss", alpha);
    pass = pass && row.mean_tpr >= 0.95 && row.mean_fdr <= alpha + 0.05;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "alpha=%.1f tpr=%.3f fdr=%.3f; ", alpha, row.mean_tpr,
                  row.mean_fdr);
    detail += buf;
  }
  detail += "need tpr>=0.95, fdr<=alpha+0.05 (" + std::to_string(elapsed_s(start)) + "s)";
  report(1, "oracle recovery, 50 trials at n=500, p=50", pass, detail);
}

// Criteria 2 and 3 share one experiment: the cross-fitted method controls
// FDR, the once-fitted pseudo-outcome pipeline does not.
void criteria_fdr_control_and_naive_failure(unsigned threads) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentSpec spec;
  spec.sim = scaled_linear(1000);
  spec.trials = 50;
  spec.alphas = {0.1, 0.2, 0.3};
  spec.seed = RngSpec{1002, 0};
  spec.threads = threads;

  MethodContext context;
  context.B = 100;
  context.stabsel_cate.propensity = PropensitySpec::known_value(0.5);  // RCT design
  context.pseudo_cate.method = CateMethod::X;
  context.pseudo_cate.propensity = PropensitySpec::known_value(0.5);
  MethodSpec naive = make_method("naive_ipss", context);
  naive.B = 50;
  spec.methods = {make_method("causal_stabsel", context), naive};

  ExperimentResult result = run_experiment(spec);

  bool pass2 = true;
  std::string detail2;
  for (double alpha : spec.alphas) {
    const ResultRow& row = row_at(result.table, "causal_stabsel", alpha);
    pass2 = pass2 && row.mean_fdr <= alpha + 2.0 * row.se_fdr;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "alpha=%.1f fdr=%.3f (se %.3f); ", alpha, row.mean_fdr,
                  row.se_fdr);
    detail2 += buf;
  }
  const ResultRow& tpr_row = row_at(result.table, "causal_stabsel", 0.2);
  pass2 = pass2 && tpr_row.mean_tpr >= 0.6;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "tpr@0.2=%.3f (need >=0.6); %.0fs", tpr_row.mean_tpr,
                elapsed_s(start));
  report(2, "cross-fitted selection controls FDR, 50 trials at n=1000, p=50", pass2,
         detail2 + buf);

  const ResultRow& naive_row = row_at(result.table, "naive_ipss", 0.1);
  std::snprintf(buf, sizeof(buf), "naive fdr@0.1=%.3f (need >=0.2 to reproduce the failure)",
                naive_row.mean_fdr);
  report(3, "once-fitted pseudo-outcome pipeline loses FDR control", naive_row.mean_fdr >= 0.2,
         buf);
}

// Criterion 4: oracle selection-probability variance against the bound.
void criterion_variance_bound(unsigned threads) {
  const auto start = std::chrono::steady_clock::now();
  VarianceBoundConfig config;
  config.sim = scaled_linear(500);
  config.B = 25;
  config.m = 50;
  config.replications = 200;
  config.grid_size = 15;
  config.threads = threads;
  config.seed = RngSpec{1004, 0};
  BoundCheckReport result = validate_variance_bound(config);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%d violations across %d cells, bound %.4f, slack 3 SE (%.0fs)",
                result.violations, static_cast<int>(result.rows.size()), result.bound,
                elapsed_s(start));
  report(4, "oracle variance bound at B=25, m=50, n=500, R=200", result.pass(), buf);
}

// Criterion 5: expected-false-positive calibration of select_at_target.
void criterion_efp_calibration(unsigned threads) {
  const auto start = std::chrono::steady_clock::now();
  EfpCalibrationConfig config;
  config.sim = scaled_linear(1000);
  config.targets = {0.5, 1.0, 2.0};
  config.trials = 100;
  config.threads = threads;
  config.seed = RngSpec{1005, 0};
  MethodContext context;
  context.B = 50;
  context.stabsel_cate.propensity = PropensitySpec::known_value(0.5);
  config.method = make_method("causal_stabsel", context);

  EfpCalibrationReport result = validate_efp_calibration(config);
  std::string detail;
  for (std::size_t i = 0; i < result.targets.size(); ++i) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "t=%.1f FP=%.3f (se %.3f); ", result.targets[i],
                  result.mean_fp[i], result.se_fp[i]);
    detail += buf;
  }
  detail += "need FP <= t + 2 SE (" + std::to_string(static_cast<int>(elapsed_s(start))) + "s)";
  report(5, "efp score calibration over 100 trials", result.pass(), detail);
}

// Criterion 6: the analytic-oracle property suite.
void criterion_analytic_suite() {
  const auto start = std::chrono::steady_clock::now();
  bool pass = true;
  std::string why;
  auto expect = [&](bool ok, const std::string& label) {
    if (!ok) {
      pass = false;
      why += label + "; ";
    }
  };

  {  // Lasso against the soft-threshold closed form on an orthogonal design.
    const int n = 8, p = 4;
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = (i & 1) ? 1 : -1;
      X(i, 1) = (i & 2) ? 1 : -1;
      X(i, 2) = (i & 4) ? 1 : -1;
      X(i, 3) = ((i & 1) ? 1 : -1) * ((i & 2) ? 1 : -1);
    }
    Rng gen(RngSpec{1006, 0});
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = 1.1 * X(i, 0) - 0.4 * X(i, 3) + 0.05 * gen.normal();
    Eigen::VectorXd lambdas(4);
    lambdas << 0.8, 0.45, 0.2, 0.07;
    RegularizationPath path = lasso_path(X, y, lambdas);
    Eigen::VectorXd yc = y.array() - y.mean();
    for (int g = 0; g < 4 && pass; ++g) {
      for (int j = 0; j < p; ++j) {
        const double rho = X.col(j).dot(yc) / n;
        const double closed =
            rho > lambdas[g] ? rho - lambdas[g] : (rho < -lambdas[g] ? rho + lambdas[g] : 0.0);
        expect(std::abs(path.coefficients(g, j) - closed) <= 1e-6, "lasso soft-threshold");
      }
    }
  }

  {  // Ridge against its normal equations.
    Eigen::MatrixXd X = toeplitz_gaussian(40, 5, 0.3, RngSpec{1006, 1});
    Rng gen(RngSpec{1006, 2});
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) y[i] = X(i, 1) + 0.3 * gen.normal();
    LinearModel model = ridge_fit(X, y, 2.5);
    Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
    Eigen::VectorXd yc = y.array() - y.mean();
    Eigen::VectorXd residual =
        (Xc.transpose() * Xc + 2.5 * Eigen::MatrixXd::Identity(5, 5)) * model.coefficients -
        Xc.transpose() * yc;
    expect(residual.cwiseAbs().maxCoeff() <= 1e-8, "ridge normal equations");
  }

  {  // BH against brute-force step-up over permutations of a small multiset.
    std::vector<double> base = {0.02, 0.03, 0.2, 0.6, 1.0};
    std::sort(base.begin(), base.end());
    do {
      const int m = static_cast<int>(base.size());
      Eigen::VectorXd p(m);
      for (int i = 0; i < m; ++i) p[i] = base[static_cast<std::size_t>(i)];
      std::vector<double> sorted(base);
      std::sort(sorted.begin(), sorted.end());
      int kstar = 0;
      for (int k = 1; k <= m; ++k) {
        if (sorted[static_cast<std::size_t>(k - 1)] <= 0.1 * k / m) kstar = k;
      }
      std::vector<int> expect_set;
      if (kstar > 0) {
        for (int i = 0; i < m; ++i) {
          if (p[i] <= sorted[static_cast<std::size_t>(kstar - 1)]) expect_set.push_back(i);
        }
      }
      expect(bh_select(p, 0.1) == SelectionSet::of(expect_set), "BH step-up");
    } while (std::next_permutation(base.begin(), base.end()) && pass);
  }

  // f-transform hand values.
  expect(f_transform(0.5) == 0.0, "f(0.5)");
  expect(std::abs(f_transform(0.75) - 0.125) < 1e-15, "f(0.75)");
  expect(std::abs(f_transform(1.0) - 1.0) < 1e-15, "f(1)");

  {  // Measure weights normalize to one.
    Eigen::VectorXd lambdas(7);
    double v = 2.0;
    for (int g = 0; g < 7; ++g) {
      lambdas[g] = v;
      v *= 0.62;
    }
    for (double delta : {0.0, 1.0, 2.0}) {
      expect(std::abs(measure_weights(lambdas, delta).weights.sum() - 1.0) <= 1e-12,
             "measure normalization");
    }
  }

  {  // Bound-constant hand value at a point measure.
    Eigen::VectorXd q(1);
    q << 1.0;
    MeasureWeights point;
    point.weights = Eigen::VectorXd::Ones(1);
    expect(std::abs(efp_bound_constant(q, point, 2, 10) - 0.02575) <= 1e-12,
           "bound constant 0.02575");
  }

  {  // select_fdr hand scan.
    Eigen::VectorXd efp(3);
    efp << 0.05, 0.2, 3.0;
    expect(select_fdr(efp, 0.1) == SelectionSet::of({0, 1}), "select_fdr hand scan");
  }

  {  // DR pseudo-outcome hand values.
    Dataset data;
    data.X = Eigen::MatrixXd::Zero(2, 1);
    data.y.resize(2);
    data.y << 1.0, 0.0;
    data.z.resize(2);
    data.z << 1, 0;
    data.feature_names = {"x"};
    NuisanceModels nui;
    nui.m0 = [](const Eigen::MatrixXd& X) { return Eigen::VectorXd::Constant(X.rows(), 0.2).eval(); };
    nui.m1 = [](const Eigen::MatrixXd& X) { return Eigen::VectorXd::Constant(X.rows(), 0.5).eval(); };
    nui.e = [](const Eigen::MatrixXd& X) { return Eigen::VectorXd::Constant(X.rows(), 0.5).eval(); };
    Eigen::VectorXd phi = dr_pseudo_outcomes(data, nui);
    expect(std::abs(phi[0] - 1.3) < 1e-12 && std::abs(phi[1] - 0.7) < 1e-12,
           "DR hand values 1.3/0.7");
  }

  {  // Monotone threshold-selector events plus thread-count determinism.
    Eigen::MatrixXd X = toeplitz_gaussian(100, 5, 0.0, RngSpec{1006, 3});
    Rng gen(RngSpec{1006, 4});
    Eigen::VectorXd tau(100);
    for (int i = 0; i < 100; ++i) tau[i] = std::abs(X(i, 1)) + 0.2 * gen.normal();
    StabselParams params;
    params.B = 5;
    params.m = 30;
    params.grid_size = 8;
    params.selector_gbt.rounds = 25;
    params.threads = 1;
    StabselResult serial = run_oracle_stabsel(X, tau, SelectorKind::ImportanceThreshold,
                                              params, RngSpec{1006, 5});
    params.threads = 4;
    StabselResult threaded = run_oracle_stabsel(X, tau, SelectorKind::ImportanceThreshold,
                                                params, RngSpec{1006, 5});
    expect(serial.events.events == threaded.events.events, "thread-count determinism");
    for (int b = 0; b < 10 && pass; ++b) {
      for (int j = 0; j < 5; ++j) {
        for (int g = 0; g + 1 < 8; ++g) {
          if (serial.events.get(b, g, j)) {
            expect(serial.events.get(b, g + 1, j), "monotone threshold events");
          }
        }
      }
    }
  }

  const double seconds = elapsed_s(start);
  expect(seconds < 60.0, "runtime under 60s");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s(%.1fs)", why.c_str(), seconds);
  report(6, "analytic-oracle property suite", pass, buf);
}

}  // namespace

int main() {
  const unsigned threads = default_thread_count();
  std::printf("acceptance suite, %u worker threads\n", threads);
  criterion_analytic_suite();
  criterion_oracle_recovery(threads);
  criterion_variance_bound(threads);
  criteria_fdr_control_and_naive_failure(threads);
  criterion_efp_calibration(threads);
  std::printf("%s: %d criterion failure(s)\n", failures == 0 ? "SUCCESS" : "FAILURE", failures);
  return failures == 0 ? 0 : 1;
}

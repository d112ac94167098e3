#include "causalstab/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "causalstab/csv.hpp"
#include "causalstab/lasso.hpp"
#include "causalstab/parallel.hpp"
#include "causalstab/stats.hpp"

namespace cstab {

namespace {

StabselParams stabsel_params_for(const MethodSpec& spec, int n, unsigned threads) {
  StabselParams params;
  params.B = spec.B;
  params.m = std::max(1, static_cast<int>(spec.m_fraction * n));
  params.m = std::min(params.m, n / 2);
  params.grid_size = spec.grid_size;
  params.threads = threads;
  params.selector_gbt = spec.selector_gbt;
  return params;
}

IpssParams ipss_params_for(const MethodSpec& spec) {
  IpssParams params;
  params.delta = spec.delta;
  params.q_cap_fraction = spec.q_cap_fraction;
  return params;
}

std::vector<SelectionSet> per_alpha_from_report(const EfpReport& report,
                                                const std::vector<double>& alphas) {
  std::vector<SelectionSet> out;
  out.reserve(alphas.size());
  for (double alpha : alphas) out.push_back(select_fdr(report.efp, alpha));
  return out;
}

// One method on one simulated trial; returns a selection per alpha.
std::vector<SelectionSet> run_method(const MethodSpec& spec, const SimulatedDataset& sim,
                                     const std::vector<double>& alphas, RngSpec rng,
                                     unsigned threads) {
  const int n = sim.data.n();
  switch (spec.kind) {
    case MethodKind::CausalStabsel: {
      StabselResult result = run_causal_stabsel(sim.data, spec.selector, spec.cate,
                                                stabsel_params_for(spec, n, threads), rng);
      EfpReport report =
          ipss_report(result.curves, result.events, result.grid, ipss_params_for(spec));
      return per_alpha_from_report(report, alphas);
    }
    case MethodKind::OracleIpss: {
      StabselResult result = run_oracle_stabsel(sim.data.X, sim.tau, spec.selector,
                                                stabsel_params_for(spec, n, threads), rng);
      EfpReport report =
          ipss_report(result.curves, result.events, result.grid, ipss_params_for(spec));
      return per_alpha_from_report(report, alphas);
    }
    case MethodKind::NaiveIpss: {
      Eigen::MatrixXd X;
      Eigen::VectorXd phi;
      if (spec.honest_split) {
        HonestPseudo h = honest_split_pseudo_dataset(sim.data, spec.cate, rng.substream(0));
        X = std::move(h.X);
        phi = std::move(h.phi);
      } else {
        std::tie(X, phi) =
            crossfit_pseudo_dataset(sim.data, spec.pseudo_folds, spec.cate, rng.substream(0));
      }
      StabselParams params = stabsel_params_for(spec, static_cast<int>(X.rows()), threads);
      StabselResult result =
          run_oracle_stabsel(X, phi, spec.selector, params, rng.substream(1));
      EfpReport report =
          ipss_report(result.curves, result.events, result.grid, ipss_params_for(spec));
      return per_alpha_from_report(report, alphas);
    }
    case MethodKind::LassoCv: {
      auto [X, phi] =
          crossfit_pseudo_dataset(sim.data, spec.pseudo_folds, spec.cate, rng.substream(0));
      SelectionSet set = lasso_cv_select(X, phi, 5, rng.substream(1));
      return std::vector<SelectionSet>(alphas.size(), set);
    }
    case MethodKind::BhOls: {
      auto [X, phi] =
          crossfit_pseudo_dataset(sim.data, spec.pseudo_folds, spec.cate, rng.substream(0));
      Eigen::VectorXd pvalues = ols_pvalues(X, phi, spec.univariate_bh);
      std::vector<SelectionSet> out;
      out.reserve(alphas.size());
      for (double alpha : alphas) out.push_back(bh_select(pvalues, alpha));
      return out;
    }
    case MethodKind::TopkImportance: {
      auto [X, phi] =
          crossfit_pseudo_dataset(sim.data, spec.pseudo_folds, spec.cate, rng.substream(0));
      TreeEnsemble ensemble = gbt_fit(X, phi, spec.selector_gbt, rng.substream(1));
      const int k = spec.topk >= 0 ? spec.topk : sim.truth.modifiers.size();
      SelectionSet set = topk_importance_select(gbt_importance(ensemble), k);
      return std::vector<SelectionSet>(alphas.size(), set);
    }
  }
  throw std::logic_error("run_method: unhandled method kind");
}

double sample_se(const std::vector<double>& values, double mean) {
  if (values.size() < 2) return 0.0;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(values.size() - 1);
  return std::sqrt(var / static_cast<double>(values.size()));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.sim.validate();
  if (spec.trials < 1) throw std::invalid_argument("run_experiment: trials must be >= 1");
  for (double alpha : spec.alphas) {
    if (alpha < 0.0 || alpha > 0.5) {
      throw std::invalid_argument("run_experiment: alphas must lie in [0, 0.5]");
    }
  }

  ExperimentResult result;
  result.records.resize(static_cast<std::size_t>(spec.trials));

  parallel_for(static_cast<std::size_t>(spec.trials), spec.threads, [&](std::size_t t) {
    RngSpec trial_stream = spec.seed.substream(t);
    SimConfig sim_config = spec.sim;
    sim_config.seed = trial_stream.substream(0);
    SimulatedDataset sim = generate(sim_config);

    TrialRecord record;
    record.trial_id = static_cast<int>(t);
    record.p = sim.data.p();
    record.truth = sim.truth.modifiers;
    for (std::size_t i = 0; i < spec.methods.size(); ++i) {
      const MethodSpec& method = spec.methods[i];
      const auto start = std::chrono::steady_clock::now();
      try {
        // Methods inside a trial run sequentially; trials own the pool.
        record.selections[method.name] =
            run_method(method, sim, spec.alphas, trial_stream.substream(1 + i), 1);
      } catch (const std::exception& e) {
        record.failures[method.name] = e.what();
      }
      record.seconds[method.name] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    result.records[t] = std::move(record);
    if (spec.on_trial) spec.on_trial(result.records[t]);
  });

  for (const auto& method : spec.methods) {
    int failures = 0;
    for (const auto& record : result.records) {
      failures += record.failures.count(method.name) ? 1 : 0;
    }
    if (5 * failures > spec.trials) {
      throw std::runtime_error("run_experiment: method '" + method.name + "' failed in " +
                               std::to_string(failures) + "/" + std::to_string(spec.trials) +
                               " trials");
    }
  }

  result.table = aggregate_records(result.records, spec.methods, spec.alphas);
  return result;
}

std::vector<ResultRow> aggregate_records(const std::vector<TrialRecord>& records,
                                         const std::vector<MethodSpec>& methods,
                                         const std::vector<double>& alphas) {
  std::vector<ResultRow> table;
  for (const auto& method : methods) {
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
      std::vector<double> tprs, fdrs, counts;
      for (const auto& record : records) {
        auto it = record.selections.find(method.name);
        if (it == record.selections.end()) continue;
        const Metrics m = tpr_fdr(it->second[ai], record.truth, record.p);
        tprs.push_back(m.tpr);
        fdrs.push_back(m.fdr);
        counts.push_back(static_cast<double>(m.n_selected));
      }
      ResultRow row;
      row.method = method.name;
      row.alpha = alphas[ai];
      row.trials = static_cast<int>(tprs.size());
      if (!tprs.empty()) {
        row.mean_tpr = std::accumulate(tprs.begin(), tprs.end(), 0.0) / tprs.size();
        row.mean_fdr = std::accumulate(fdrs.begin(), fdrs.end(), 0.0) / fdrs.size();
        row.mean_selected = std::accumulate(counts.begin(), counts.end(), 0.0) / counts.size();
        row.se_tpr = sample_se(tprs, row.mean_tpr);
        row.se_fdr = sample_se(fdrs, row.mean_fdr);
      }
      table.push_back(std::move(row));
    }
  }
  return table;
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_results_csv: cannot open " + path);
  out << "method,alpha,mean_tpr,se_tpr,mean_fdr,se_fdr,mean_selected,trials\n";
  for (const auto& row : table) {
    out << row.method << ',' << format_double(row.alpha) << ',' << format_double(row.mean_tpr)
        << ',' << format_double(row.se_tpr) << ',' << format_double(row.mean_fdr) << ','
        << format_double(row.se_fdr) << ',' << format_double(row.mean_selected) << ','
        << row.trials << '\n';
  }
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_results_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_results_csv: empty file");
  std::vector<ResultRow> table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    ResultRow row;
    std::getline(ss, row.method, ',');
    std::getline(ss, cell, ',');
    row.alpha = std::stod(cell);
    std::getline(ss, cell, ',');
    row.mean_tpr = std::stod(cell);
    std::getline(ss, cell, ',');
    row.se_tpr = std::stod(cell);
    std::getline(ss, cell, ',');
    row.mean_fdr = std::stod(cell);
    std::getline(ss, cell, ',');
    row.se_fdr = std::stod(cell);
    std::getline(ss, cell, ',');
    row.mean_selected = std::stod(cell);
    std::getline(ss, cell, ',');
    row.trials = std::stoi(cell);
    table.push_back(std::move(row));
  }
  return table;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> crossfit_pseudo_dataset(const Dataset& data,
                                                                    int k,
                                                                    const CateSpec& cate,
                                                                    RngSpec rng) {
  if (k < 2) throw std::invalid_argument("crossfit_pseudo_dataset: k must be >= 2");
  data.validate();
  FoldAssignment folds = kfold_split(data.n(), k, rng.substream(0));
  Eigen::VectorXd phi(data.n());
  const auto fold_rows = folds.folds();
  for (int f = 0; f < k; ++f) {
    std::vector<int> fit_rows;
    for (int i = 0; i < data.n(); ++i) {
      if (folds.fold_of[static_cast<std::size_t>(i)] != f) fit_rows.push_back(i);
    }
    const auto& held_out = fold_rows[static_cast<std::size_t>(f)];
    // Predictions for fold rows come only from models trained outside the fold.
    for (int r : held_out) {
      if (folds.fold_of[static_cast<std::size_t>(r)] != f) {
        throw std::logic_error("crossfit_pseudo_dataset: fold bookkeeping error");
      }
    }
    CateModel model = fit_cate(data.subset(fit_rows), cate,
                               rng.substream(1 + static_cast<std::uint64_t>(f)));
    Eigen::VectorXd pred = predict_cate(model, rows_subset(data.X, held_out));
    for (std::size_t i = 0; i < held_out.size(); ++i) {
      phi[held_out[i]] = pred[static_cast<Eigen::Index>(i)];
    }
  }
  return {data.X, std::move(phi)};
}

HonestPseudo honest_split_pseudo_dataset(const Dataset& data, const CateSpec& cate,
                                         RngSpec rng) {
  data.validate();
  FoldAssignment folds = kfold_split(data.n(), 2, rng.substream(0));
  std::vector<int> train_rows, select_rows;
  for (int i = 0; i < data.n(); ++i) {
    (folds.fold_of[static_cast<std::size_t>(i)] == 0 ? train_rows : select_rows).push_back(i);
  }
  CateModel model = fit_cate(data.subset(train_rows), cate, rng.substream(1));
  HonestPseudo out;
  out.rows = select_rows;
  out.X = rows_subset(data.X, select_rows);
  out.phi = predict_cate(model, out.X);
  return out;
}

SelectionSet bh_select(const Eigen::VectorXd& pvalues, double alpha) {
  const int m = static_cast<int>(pvalues.size());
  for (int i = 0; i < m; ++i) {
    if (pvalues[i] < 0.0 || pvalues[i] > 1.0) {
      throw std::invalid_argument("bh_select: p-values must lie in [0, 1]");
    }
  }
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return pvalues[a] < pvalues[b]; });
  int cutoff = 0;  // number of rejections
  for (int i = m; i >= 1; --i) {
    if (pvalues[order[static_cast<std::size_t>(i - 1)]] <=
        static_cast<double>(i) * alpha / static_cast<double>(m)) {
      cutoff = i;
      break;
    }
  }
  std::vector<int> rejected(order.begin(), order.begin() + cutoff);
  return SelectionSet::of(std::move(rejected));
}

SelectionSet topk_importance_select(const Eigen::VectorXd& importance, int k) {
  const int p = static_cast<int>(importance.size());
  if (k < 0 || k > p) throw std::invalid_argument("topk_importance_select: k out of range");
  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (importance[a] != importance[b]) return importance[a] > importance[b];
    return a < b;
  });
  std::vector<int> top(order.begin(), order.begin() + k);
  return SelectionSet::of(std::move(top));
}

Eigen::VectorXd ols_pvalues(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            bool univariate) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (y.size() != n) throw std::invalid_argument("ols_pvalues: dimension mismatch");

  auto joint_pvalues = [&](const Eigen::MatrixXd& Xin) {
    const int q = static_cast<int>(Xin.cols());
    const int df = n - q - 1;
    if (df < 1) throw std::invalid_argument("ols_pvalues: needs n > p + 1");
    Eigen::MatrixXd D(n, q + 1);
    D.col(0).setOnes();
    D.rightCols(q) = Xin;
    Eigen::MatrixXd gram = D.transpose() * D;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    Eigen::VectorXd beta = ldlt.solve(D.transpose() * y);
    const Eigen::VectorXd residual = y - D * beta;
    const double sigma2 = residual.squaredNorm() / static_cast<double>(df);
    Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(q + 1, q + 1));
    Eigen::VectorXd pvals(q);
    for (int j = 0; j < q; ++j) {
      const double se = std::sqrt(sigma2 * cov(j + 1, j + 1));
      const double t = beta[j + 1] / se;
      pvals[j] = student_t_two_sided_pvalue(t, static_cast<double>(df));
    }
    return pvals;
  };

  if (!univariate) return joint_pvalues(X);
  Eigen::VectorXd pvals(p);
  for (int j = 0; j < p; ++j) {
    pvals[j] = joint_pvalues(X.col(j))[0];
  }
  return pvals;
}

SelectionSet lasso_cv_select(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k,
                             RngSpec rng, int grid_size) {
  const int n = static_cast<int>(X.rows());
  if (k < 2 || k > n) throw std::invalid_argument("lasso_cv_select: bad fold count");

  StandardizedMatrix full = standardize_columns(X);
  const double lmax = lasso_lambda_max(full.X, y);
  if (lmax <= 0.0) return SelectionSet{};
  Eigen::VectorXd lambdas(grid_size);
  const double ratio = std::pow(0.01, 1.0 / static_cast<double>(grid_size - 1));
  for (int g = 0; g < grid_size; ++g) lambdas[g] = lmax * 1.001 * std::pow(ratio, g);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng gen(rng);
  gen.shuffle(order);

  Eigen::VectorXd cv_err = Eigen::VectorXd::Zero(grid_size);
  for (int fold = 0; fold < k; ++fold) {
    std::vector<int> train_rows, valid_rows;
    for (int i = 0; i < n; ++i) {
      (i % k == fold ? valid_rows : train_rows).push_back(order[static_cast<std::size_t>(i)]);
    }
    StandardizedMatrix train = standardize_columns(rows_subset(X, train_rows));
    const Eigen::VectorXd y_train = rows_subset(y, train_rows);
    RegularizationPath path = lasso_path(train.X, y_train, lambdas);
    // Validation rows mapped through the training fold's scaling.
    Eigen::MatrixXd Xv = rows_subset(X, valid_rows);
    Xv = (Xv.rowwise() - train.means.transpose()).array().rowwise() /
         train.scales.transpose().array();
    const Eigen::VectorXd yv = rows_subset(y, valid_rows);
    for (int g = 0; g < grid_size; ++g) {
      const Eigen::VectorXd pred =
          (Xv * path.coefficients.row(g).transpose()).array() + path.intercept;
      cv_err[g] += (yv - pred).squaredNorm();
    }
  }
  int best = 0;
  for (int g = 1; g < grid_size; ++g) {
    if (cv_err[g] < cv_err[best]) best = g;  // ties keep the larger penalty
  }
  RegularizationPath path = lasso_path(full.X, y, lambdas);
  return path.active_sets[static_cast<std::size_t>(best)];
}

// --- Validators --------------------------------------------------------------

namespace {

// Builds a grid from oracle previews of one replication's data.
LambdaGrid oracle_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& tau,
                       SelectorKind selector, const StabselParams& params, RngSpec rng) {
  std::vector<PreviewFit> previews;
  const int n = static_cast<int>(X.rows());
  for (int i = 0; i < params.preview_fits; ++i) {
    auto pair = draw_subsample_pair(n, params.m, rng.substream(static_cast<std::uint64_t>(i)));
    PreviewFit preview;
    preview.x = rows_subset(X, pair.first);
    preview.response = rows_subset(tau, pair.first);
    previews.push_back(std::move(preview));
  }
  return build_lambda_grid(selector, previews, params.grid_size, params);
}

struct OracleReplication {
  Eigen::MatrixXd pi_hat;
};

}  // namespace

BoundCheckReport validate_variance_bound(const VarianceBoundConfig& config) {
  config.sim.validate();
  if (config.replications < 50) {
    throw std::invalid_argument("validate_variance_bound: needs at least 50 replications");
  }
  const GroundTruth truth = draw_truth(config.sim, config.seed.substream(0));

  StabselParams params;
  params.B = config.B;
  params.m = config.m;
  params.grid_size = config.grid_size;
  params.threads = 1;

  // Fixed grid, built from the first replication's draw.
  LambdaGrid grid;
  {
    RngSpec stream = config.seed.substream(1);
    Eigen::MatrixXd X =
        toeplitz_gaussian(config.sim.n, config.sim.p, config.sim.rho, stream.substream(0));
    Eigen::VectorXd tau = eval_mu_tau(X, truth, config.sim.setting).second;
    grid = oracle_grid(X, tau, config.selector, params, stream.substream(1));
  }

  const int R = config.replications;
  std::vector<OracleReplication> reps(static_cast<std::size_t>(R));
  parallel_for(static_cast<std::size_t>(R), config.threads, [&](std::size_t r) {
    RngSpec stream = config.seed.substream(100 + r);
    Eigen::MatrixXd X =
        toeplitz_gaussian(config.sim.n, config.sim.p, config.sim.rho, stream.substream(0));
    Eigen::VectorXd tau = eval_mu_tau(X, truth, config.sim.setting).second;
    auto [curves, events] = estimate_oracle_probabilities(X, tau, config.selector, grid,
                                                          params, stream.substream(1));
    reps[r].pi_hat = std::move(curves.pi_hat);
  });

  BoundCheckReport report;
  report.bound = 1.0 / (8.0 * config.B) +
                 static_cast<double>(config.m) * config.m / static_cast<double>(config.sim.n);
  const double mc_factor = 3.0 * std::sqrt(2.0 / static_cast<double>(R - 1));
  for (int j = 0; j < config.sim.p; ++j) {
    for (int g = 0; g < grid.size(); ++g) {
      double mean = 0.0;
      for (const auto& rep : reps) mean += rep.pi_hat(j, g);
      mean /= R;
      double ss = 0.0;
      for (const auto& rep : reps) {
        const double d = rep.pi_hat(j, g) - mean;
        ss += d * d;
      }
      BoundCheckRow row;
      row.feature = j;
      row.lambda = grid.values[g];
      row.emp_var = ss / static_cast<double>(R - 1);
      row.bound = report.bound;
      row.slack = mc_factor * row.emp_var;
      row.violated = row.emp_var > row.bound + row.slack;
      report.violations += row.violated ? 1 : 0;
      report.rows.push_back(row);
    }
  }
  return report;
}

void write_bound_csv(const std::string& path, const BoundCheckReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_bound_csv: cannot open " + path);
  out << "j,lambda,emp_var,bound,slack,violated\n";
  for (const auto& row : report.rows) {
    out << row.feature << ',' << format_double(row.lambda) << ',' << format_double(row.emp_var)
        << ',' << format_double(row.bound) << ',' << format_double(row.slack) << ','
        << (row.violated ? 1 : 0) << '\n';
  }
}

BiasDecayReport validate_bias_decay(const BiasDecayConfig& config) {
  if (config.replications < 100) {
    throw std::invalid_argument("validate_bias_decay: needs at least 100 replications");
  }
  if (config.m > config.n_small / 2) {
    throw std::invalid_argument("validate_bias_decay: m must fit the smaller sample");
  }
  SimConfig sim = config.sim;
  sim.n = config.n_large;
  sim.validate();
  const GroundTruth truth = draw_truth(sim, config.seed.substream(0));

  StabselParams params;
  params.B = config.B;
  params.m = config.m;
  params.grid_size = config.grid_size;
  params.threads = 1;

  LambdaGrid grid;
  {
    RngSpec stream = config.seed.substream(1);
    Eigen::MatrixXd X = toeplitz_gaussian(sim.n, sim.p, sim.rho, stream.substream(0));
    Eigen::VectorXd tau = eval_mu_tau(X, truth, sim.setting).second;
    grid = oracle_grid(X, tau, config.selector, params, stream.substream(1));
  }
  const int G = grid.size();

  // Reference oracle curve at lambda_min: pi depends on the subsample size m
  // and the covariate law only, so one pooled estimate serves both n.
  Eigen::VectorXd reference = Eigen::VectorXd::Zero(sim.p);
  {
    StabselParams ref_params = params;
    ref_params.B = config.reference_B;
    std::vector<Eigen::VectorXd> partial(
        static_cast<std::size_t>(config.reference_replications));
    parallel_for(static_cast<std::size_t>(config.reference_replications), config.threads,
                 [&](std::size_t r) {
                   RngSpec stream = config.seed.substream(1000 + r);
                   Eigen::MatrixXd X =
                       toeplitz_gaussian(sim.n, sim.p, sim.rho, stream.substream(0));
                   Eigen::VectorXd tau = eval_mu_tau(X, truth, sim.setting).second;
                   auto [curves, events] = estimate_oracle_probabilities(
                       X, tau, config.selector, grid, ref_params, stream.substream(1));
                   partial[r] = curves.pi_hat.col(G - 1);
                 });
    for (const auto& v : partial) reference += v;
    reference /= static_cast<double>(config.reference_replications);
  }

  auto gap_at_n = [&](int n, std::uint64_t salt, double* se_out) {
    std::vector<double> gaps(static_cast<std::size_t>(config.replications));
    parallel_for(static_cast<std::size_t>(config.replications), config.threads,
                 [&](std::size_t r) {
                   RngSpec stream = config.seed.substream(salt + r);
                   SimConfig local = sim;
                   local.n = n;
                   SimulatedDataset data = generate_with_truth(local, truth, stream.substream(0));
                   Eigen::MatrixXd pi_hat;
                   if (config.use_true_tau) {
                     auto [curves, events] = estimate_oracle_probabilities(
                         data.data.X, data.tau, config.selector, grid, params,
                         stream.substream(1));
                     pi_hat = std::move(curves.pi_hat);
                   } else {
                     auto [curves, events] = estimate_selection_probabilities(
                         data.data, config.selector, config.cate, grid, params,
                         stream.substream(1));
                     pi_hat = std::move(curves.pi_hat);
                   }
                   double gap = 0.0;
                   for (int j : truth.modifiers.indices) {
                     gap += std::abs(pi_hat(j, G - 1) - reference[j]);
                   }
                   gaps[r] = gap / truth.modifiers.size();
                 });
    const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
    *se_out = sample_se(gaps, mean);
    return mean;
  };

  BiasDecayReport report;
  report.n_small = config.n_small;
  report.n_large = config.n_large;
  report.gap_small = gap_at_n(config.n_small, 2000, &report.se_small);
  report.gap_large = gap_at_n(config.n_large, 3000, &report.se_large);
  return report;
}

void write_bias_csv(const std::string& path, const BiasDecayReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_bias_csv: cannot open " + path);
  out << "n,gap,se\n";
  out << report.n_small << ',' << format_double(report.gap_small) << ','
      << format_double(report.se_small) << '\n';
  out << report.n_large << ',' << format_double(report.gap_large) << ','
      << format_double(report.se_large) << '\n';
}

bool EfpCalibrationReport::pass() const {
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (mean_fp[i] > targets[i] + 2.0 * se_fp[i]) return false;
  }
  return true;
}

EfpCalibrationReport validate_efp_calibration(const EfpCalibrationConfig& config) {
  config.sim.validate();
  if (config.trials < 2) throw std::invalid_argument("validate_efp_calibration: trials >= 2");

  std::vector<std::vector<double>> fp(config.targets.size());
  for (auto& v : fp) v.resize(static_cast<std::size_t>(config.trials));

  parallel_for(static_cast<std::size_t>(config.trials), config.threads, [&](std::size_t t) {
    RngSpec stream = config.seed.substream(t);
    SimConfig sim = config.sim;
    sim.seed = stream.substream(0);
    SimulatedDataset data = generate(sim);
    StabselResult result =
        run_causal_stabsel(data.data, config.method.selector, config.method.cate,
                           stabsel_params_for(config.method, sim.n, 1), stream.substream(1));
    EfpReport report =
        ipss_report(result.curves, result.events, result.grid, ipss_params_for(config.method));
    for (std::size_t i = 0; i < config.targets.size(); ++i) {
      const SelectionSet selected = select_at_target(report.efp, config.targets[i]);
      int false_pos = 0;
      for (int j : selected.indices) {
        false_pos += data.truth.modifiers.contains(j) ? 0 : 1;
      }
      fp[i][t] = static_cast<double>(false_pos);
    }
  });

  EfpCalibrationReport report;
  report.targets = config.targets;
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    const double mean = std::accumulate(fp[i].begin(), fp[i].end(), 0.0) / fp[i].size();
    report.mean_fp.push_back(mean);
    report.se_fp.push_back(sample_se(fp[i], mean));
  }
  return report;
}

void write_efp_calibration_csv(const std::string& path, const EfpCalibrationReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_efp_calibration_csv: cannot open " + path);
  out << "target,mean_fp,se_fp,within_bound\n";
  for (std::size_t i = 0; i < report.targets.size(); ++i) {
    const bool ok = report.mean_fp[i] <= report.targets[i] + 2.0 * report.se_fp[i];
    out << format_double(report.targets[i]) << ',' << format_double(report.mean_fp[i]) << ','
        << format_double(report.se_fp[i]) << ',' << (ok ? 1 : 0) << '\n';
  }
}

}  // namespace cstab

#include "causalstab/ipss.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "causalstab/csv.hpp"

namespace cstab {

double f_transform(double x) {
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("f_transform: input outside [0, 1]");
  if (x < 0.5) return 0.0;
  const double u = 2.0 * x - 1.0;
  return u * u * u;
}

MeasureWeights measure_weights(const Eigen::VectorXd& lambdas, double delta) {
  const int G = static_cast<int>(lambdas.size());
  if (G < 1) throw std::invalid_argument("measure_weights: empty grid");
  if (delta < 0) throw std::invalid_argument("measure_weights: delta must be >= 0");
  MeasureWeights mw;
  mw.delta = delta;
  mw.weights.resize(G);
  if (G == 1) {
    mw.weights[0] = 1.0;
    return mw;
  }
  for (int g = 0; g < G; ++g) {
    double width;
    if (g == 0) {
      width = 0.5 * (lambdas[0] - lambdas[1]);
    } else if (g == G - 1) {
      width = 0.5 * (lambdas[G - 2] - lambdas[G - 1]);
    } else {
      width = 0.5 * (lambdas[g - 1] - lambdas[g + 1]);
    }
    mw.weights[g] = std::pow(lambdas[g], -delta) * width;
  }
  mw.weights /= mw.weights.sum();
  return mw;
}

MeasureWeights measure_weights(const LambdaGrid& grid, double delta) {
  grid.validate();
  return measure_weights(grid.values, delta);
}

Eigen::VectorXd integral_scores(const Eigen::MatrixXd& pi_hat, const MeasureWeights& weights) {
  if (pi_hat.cols() != weights.weights.size()) {
    throw std::invalid_argument("integral_scores: dimension mismatch");
  }
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(pi_hat.rows());
  for (Eigen::Index j = 0; j < pi_hat.rows(); ++j) {
    for (Eigen::Index g = 0; g < pi_hat.cols(); ++g) {
      scores[j] += weights.weights[g] * f_transform(pi_hat(j, g));
    }
  }
  return scores;
}

Eigen::VectorXd integral_scores(const ProbabilityCurves& curves, const MeasureWeights& weights) {
  return integral_scores(curves.pi_hat, weights);
}

Eigen::VectorXd qhat_curve(const SelectionEvents& events) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(events.G);
  for (int b = 0; b < 2 * events.B; ++b) {
    for (int g = 0; g < events.G; ++g) {
      int count = 0;
      for (int j = 0; j < events.p; ++j) count += events.get(b, g, j) ? 1 : 0;
      q[g] += static_cast<double>(count);
    }
  }
  q /= static_cast<double>(2 * events.B);
  return q;
}

double efp_bound_constant(const Eigen::VectorXd& q_hat, const MeasureWeights& weights,
                          int B, int p) {
  if (q_hat.size() != weights.weights.size()) {
    throw std::invalid_argument("efp_bound_constant: dimension mismatch");
  }
  if (B < 2) throw std::invalid_argument("efp_bound_constant: B must be >= 2");
  const double Bd = static_cast<double>(B);
  const double pd = static_cast<double>(p);
  double C = 0.0;
  for (Eigen::Index g = 0; g < q_hat.size(); ++g) {
    const double q2 = q_hat[g] * q_hat[g];
    const double q4 = q2 * q2;
    const double q6 = q4 * q2;
    const double integrand = q2 / (Bd * Bd * pd) +
                             3.0 * (Bd - 1.0) * q4 / (Bd * Bd * pd * pd * pd) +
                             (Bd - 1.0) * (Bd - 2.0) * q6 / (Bd * Bd * pd * pd * pd * pd * pd);
    C += weights.weights[g] * integrand;
  }
  return C;
}

Eigen::VectorXd efp_scores(const Eigen::VectorXd& integral, double C, int p) {
  Eigen::VectorXd efp(integral.size());
  const double pd = static_cast<double>(p);
  for (Eigen::Index j = 0; j < integral.size(); ++j) {
    if (integral[j] < 0.0 || integral[j] > 1.0) {
      throw std::invalid_argument("efp_scores: integral score outside [0, 1]");
    }
    efp[j] = integral[j] > 0.0 ? std::min(C / integral[j], pd) : pd;
  }
  return efp;
}

SelectionSet select_at_target(const Eigen::VectorXd& efp, double t) {
  if (t < 0) throw std::invalid_argument("select_at_target: t must be >= 0");
  std::vector<int> out;
  for (Eigen::Index j = 0; j < efp.size(); ++j) {
    if (efp[j] <= t) out.push_back(static_cast<int>(j));
  }
  return SelectionSet::of(std::move(out));
}

SelectionSet select_fdr(const Eigen::VectorXd& efp, double alpha) {
  if (alpha < 0.0 || alpha > 0.5) {
    throw std::invalid_argument("select_fdr: alpha must lie in [0, 0.5]");
  }
  // The criterion t / |{efp <= t}| changes only at observed efp values,
  // so scanning those ascending finds the largest admissible set.
  std::vector<double> candidates(efp.data(), efp.data() + efp.size());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  double best_t = -1.0;
  for (double t : candidates) {
    int size = 0;
    for (Eigen::Index j = 0; j < efp.size(); ++j) size += efp[j] <= t ? 1 : 0;
    if (size > 0 && t / static_cast<double>(size) <= alpha) best_t = t;
  }
  if (best_t < 0.0) return SelectionSet{};
  return select_at_target(efp, best_t);
}

SelectionSet ss_max_select(const ProbabilityCurves& curves, double gamma) {
  if (gamma <= 0.5 || gamma > 1.0) {
    throw std::invalid_argument("ss_max_select: gamma must lie in (0.5, 1]");
  }
  std::vector<int> out;
  for (Eigen::Index j = 0; j < curves.pi_hat.rows(); ++j) {
    if (curves.pi_hat.row(j).maxCoeff() >= gamma) out.push_back(static_cast<int>(j));
  }
  return SelectionSet::of(std::move(out));
}

EfpReport ipss_report(const ProbabilityCurves& curves, const SelectionEvents& events,
                      const LambdaGrid& grid, const IpssParams& params) {
  grid.validate();
  const int G = grid.size();
  const int p = events.p;
  if (curves.pi_hat.rows() != p || curves.pi_hat.cols() != G) {
    throw std::invalid_argument("ipss_report: curves do not match events/grid");
  }
  EfpReport report;
  report.q_hat = qhat_curve(events);

  // Truncate the integration domain before q-hat exceeds the cap; keep at
  // least two points so the measure stays well-defined.
  const double cap = params.q_cap_fraction * static_cast<double>(p);
  int keep = G;
  for (int g = 0; g < G; ++g) {
    if (report.q_hat[g] > cap) {
      keep = g;
      break;
    }
  }
  keep = std::max(keep, 2);

  MeasureWeights weights = measure_weights(grid.values.head(keep), params.delta);
  report.integral_scores = integral_scores(curves.pi_hat.leftCols(keep), weights);
  report.bound_constant = efp_bound_constant(report.q_hat.head(keep), weights, events.B, p);
  report.efp = efp_scores(report.integral_scores, report.bound_constant, p);
  return report;
}

void write_efp_csv(const std::string& path, const EfpReport& report,
                   const std::vector<std::string>& feature_names) {
  if (static_cast<Eigen::Index>(feature_names.size()) != report.efp.size()) {
    throw std::invalid_argument("write_efp_csv: name count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_efp_csv: cannot open " + path);
  out << "name,integral_score,efp\n";
  for (std::size_t j = 0; j < feature_names.size(); ++j) {
    const auto idx = static_cast<Eigen::Index>(j);
    out << feature_names[j] << ',' << format_double(report.integral_scores[idx]) << ','
        << format_double(report.efp[idx]) << '\n';
  }
}

}  // namespace cstab

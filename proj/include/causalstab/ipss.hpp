#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "causalstab/dataset.hpp"
#include "causalstab/stabsel.hpp"

namespace cstab {

// f(x) = (2x - 1)^3 for x >= 1/2, else 0. Convex and nondecreasing on [0,1].
double f_transform(double x);

// Riemann weights for the measure with density proportional to lambda^-delta,
// using trapezoid cell widths on the (decreasing) grid; normalized to sum 1.
struct MeasureWeights {
  Eigen::VectorXd weights;
  double delta = 1.0;
};

MeasureWeights measure_weights(const Eigen::VectorXd& lambdas, double delta);
MeasureWeights measure_weights(const LambdaGrid& grid, double delta);

// I(j) = sum_g weights[g] * f(pi_hat(j, g)); entries lie in [0, 1].
Eigen::VectorXd integral_scores(const Eigen::MatrixXd& pi_hat, const MeasureWeights& weights);
Eigen::VectorXd integral_scores(const ProbabilityCurves& curves, const MeasureWeights& weights);

// Average number of features selected per subsample at each grid point.
Eigen::VectorXd qhat_curve(const SelectionEvents& events);

// Integrated expected-false-positive bound at threshold gamma = 1:
//   C = sum_g w_g [ q^2/(B^2 p) + 3(B-1) q^4/(B^2 p^3) + (B-1)(B-2) q^6/(B^2 p^5) ].
double efp_bound_constant(const Eigen::VectorXd& q_hat, const MeasureWeights& weights,
                          int B, int p);

// efp(j) = min(C / I(j), p), with I(j) = 0 mapping to p.
Eigen::VectorXd efp_scores(const Eigen::VectorXd& integral, double C, int p);

// { j : efp(j) <= t }.
SelectionSet select_at_target(const Eigen::VectorXd& efp, double t);

// Largest selection set whose threshold t satisfies t / |set| <= alpha;
// candidate thresholds are the observed efp values.
SelectionSet select_fdr(const Eigen::VectorXd& efp, double alpha);

// Plain stability-selection comparator: { j : max_g pi_hat(j, g) >= gamma }.
SelectionSet ss_max_select(const ProbabilityCurves& curves, double gamma);

struct EfpReport {
  Eigen::VectorXd integral_scores;  // I(j) in [0, 1]
  double bound_constant = 0.0;      // C
  Eigen::VectorXd efp;              // in (0, p]
  Eigen::VectorXd q_hat;            // full grid length
};

struct IpssParams {
  double delta = 1.0;
  // The integration domain stops before the first grid point where
  // q_hat exceeds q_cap_fraction * p; the measure is renormalized there.
  double q_cap_fraction = 0.5;
};

// Full scoring pipeline from raw events: q-hat, measure truncation,
// integral scores, the bound constant, and efp scores.
EfpReport ipss_report(const ProbabilityCurves& curves, const SelectionEvents& events,
                      const LambdaGrid& grid, const IpssParams& params);

// CSV rows = features, columns = name, integral_score, efp.
void write_efp_csv(const std::string& path, const EfpReport& report,
                   const std::vector<std::string>& feature_names);

}  // namespace cstab

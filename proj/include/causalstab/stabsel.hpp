#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "causalstab/cate.hpp"
#include "causalstab/dataset.hpp"
#include "causalstab/gbt.hpp"
#include "causalstab/rng.hpp"

namespace cstab {

enum class SelectorKind { LassoPath, ImportanceThreshold };

SelectorKind parse_selector_kind(const std::string& s);
std::string selector_kind_name(SelectorKind kind);

// Shared selector-parameter grid, strictly decreasing. For lasso, values are
// penalties; for importance selectors, thresholds on normalized importance.
struct LambdaGrid {
  Eigen::VectorXd values;
  SelectorKind selector_kind = SelectorKind::LassoPath;

  int size() const { return static_cast<int>(values.size()); }
  void validate() const;
};

struct SubsamplePair {
  std::vector<int> first;
  std::vector<int> second;
};

// Raw base-selector outcomes: one bit per (subsample, grid point, feature).
struct SelectionEvents {
  int B = 0;  // complementary pairs; 2B subsamples
  int G = 0;
  int p = 0;
  int m = 0;
  std::vector<std::uint8_t> events;  // 2B*G*p entries, row-major (b, g, j)
  std::vector<SubsamplePair> pairs;

  std::size_t index(int b, int g, int j) const {
    return (static_cast<std::size_t>(b) * static_cast<std::size_t>(G) +
            static_cast<std::size_t>(g)) *
               static_cast<std::size_t>(p) +
           static_cast<std::size_t>(j);
  }
  bool get(int b, int g, int j) const { return events[index(b, g, j)] != 0; }
  void set(int b, int g, int j, bool v) { events[index(b, g, j)] = v ? 1 : 0; }
};

struct ProbabilityCurves {
  enum class Mode { Crossfit, Oracle };

  Eigen::MatrixXd pi_hat;  // p x G, every entry a multiple of 1/(2B)
  Mode mode = Mode::Crossfit;
};

// A1 uniform over size-m subsets of {0..n-1}; A2 uniform over size-m
// subsets of the complement. Requires m <= floor(n/2).
std::pair<std::vector<int>, std::vector<int>> draw_subsample_pair(int n, int m, RngSpec rng);

// Covariate/response pair as the base selector will see it.
struct PreviewFit {
  Eigen::MatrixXd x;
  Eigen::VectorXd response;
};

struct StabselParams {
  int B = 100;
  int m = 0;  // subsample size; callers usually set floor(n/2)
  int grid_size = 25;
  unsigned threads = 1;
  GbtParams selector_gbt;            // tree selector hyperparameters
  bool standardize_response = true;  // per-subsample response scaling for lasso
  double lambda_min_ratio = 0.01;
  double grid_headroom = 1.05;
  int preview_fits = 3;
};

// Geometric grid of `grid_size` points from lambda_max down to
// lambda_max * lambda_min_ratio, where lambda_max carries 5% headroom over
// the largest value at which any preview fit selects a variable.
LambdaGrid build_lambda_grid(SelectorKind kind, const std::vector<PreviewFit>& previews,
                             int grid_size, const StabselParams& params);

// One cross-fitted complementary-pairs pass: per pair, fit the CATE on each
// complement, predict on the held-out subsample, and run the base selector
// across the shared grid. Deterministic given rng, regardless of threads.
std::pair<ProbabilityCurves, SelectionEvents> estimate_selection_probabilities(
    const Dataset& data, SelectorKind selector, const CateSpec& cate,
    const LambdaGrid& grid, const StabselParams& params, RngSpec rng);

// Same subsampling scheme with known per-row responses in place of CATE
// predictions; no model fitting occurs.
std::pair<ProbabilityCurves, SelectionEvents> estimate_oracle_probabilities(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& response, SelectorKind selector,
    const LambdaGrid& grid, const StabselParams& params, RngSpec rng);

struct StabselResult {
  ProbabilityCurves curves;
  SelectionEvents events;
  LambdaGrid grid;
};

// Convenience pipelines: build previews, derive the grid, then estimate.
StabselResult run_causal_stabsel(const Dataset& data, SelectorKind selector,
                                 const CateSpec& cate, const StabselParams& params,
                                 RngSpec rng);
StabselResult run_oracle_stabsel(const Eigen::MatrixXd& X, const Eigen::VectorXd& response,
                                 SelectorKind selector, const StabselParams& params,
                                 RngSpec rng);

// Compact cache format: header (B, G, p, m), then the tensor bit-packed in
// index order. Pairs are not stored.
void save_events(const std::string& path, const SelectionEvents& events);
SelectionEvents load_events(const std::string& path);

ProbabilityCurves curves_from_events(const SelectionEvents& events,
                                     ProbabilityCurves::Mode mode);

}  // namespace cstab

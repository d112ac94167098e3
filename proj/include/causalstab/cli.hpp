#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "causalstab/bench.hpp"
#include "causalstab/config.hpp"

namespace cstab {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitFailure = 1;  // module error or failed validation
inline constexpr int kExitUsage = 2;

struct SelectOptions {
  std::string csv_path;
  std::string outcome = "y";
  std::string treatment = "z";
  std::optional<double> target_efp;  // exactly one of these two
  std::optional<double> fdr_alpha;
  std::string preset;  // "" or "application"
  std::optional<std::string> cate;        // t | x | dr
  std::optional<std::string> base;        // ridge | gbt
  std::optional<std::string> selector;    // lasso | gbt
  std::optional<std::string> propensity;  // estimated | known:<value>
  std::optional<int> B;
  std::optional<int> m;  // subsample size; default floor(n/2) (application: floor(n/4))
  std::optional<double> delta;
  std::optional<double> q_cap_fraction;
  std::optional<int> grid_size;
  std::optional<double> clip_low;
  std::optional<double> clip_high;
  std::optional<int> dr_folds;
  std::optional<bool> winsorize;
  bool no_standardize = false;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 -> hardware concurrency
  std::string out_dir = ".";
};

struct SimulateOptions {
  std::string config_path;  // optional TOML-style file
  std::string preset;       // paper-linear-default | paper-nonlinear-default
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out_dir = ".";
  bool svg = false;
  bool quiet = false;
  bool dump_data = false;  // write the first trial's dataset + truth as CSV
};

struct ValidateOptions {
  std::string check;        // variance-bound | bias-decay | efp-calibration
  std::string config_path;  // optional
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out_dir = ".";
  bool quiet = false;
};

int cmd_select(const SelectOptions& opts);
int cmd_simulate(const SimulateOptions& opts);
int cmd_validate(const ValidateOptions& opts);

// Builds the experiment spec a preset/config pair describes; exposed so
// tests can assemble the same runs the CLI performs.
ExperimentSpec resolve_experiment(const std::string& preset, const Config& config);

// Method descriptor by name ("causal_stabsel", "oracle_ipss", "naive_ipss",
// "honest_ipss", "lasso_cv", "bh", "topk_importance") under a run context.
struct MethodContext {
  SelectorKind selector = SelectorKind::LassoPath;
  CateSpec stabsel_cate;  // estimator refit inside each subsample
  CateSpec pseudo_cate;   // estimator for one-shot pseudo-outcomes
  int B = 100;
  double m_fraction = 0.5;
  double delta = 1.0;
  double q_cap_fraction = 0.5;
  int grid_size = 25;
  int pseudo_folds = 5;
  int importance_folds = 10;
  GbtParams selector_gbt;
};

MethodSpec make_method(const std::string& name, const MethodContext& context);

PropensitySpec parse_propensity(const std::string& s);

}  // namespace cstab

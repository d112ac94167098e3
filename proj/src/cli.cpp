#include "causalstab/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "causalstab/csv.hpp"
#include "causalstab/ipss.hpp"
#include "causalstab/parallel.hpp"
#include "causalstab/svg.hpp"

namespace cstab {

namespace {

unsigned resolve_threads(unsigned requested) {
  return requested == 0 ? default_thread_count() : requested;
}

void ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

SimConfig sim_from_config(const Config& config, SimConfig base) {
  base.n = static_cast<int>(config.get_int("simulation.n", base.n));
  base.p = static_cast<int>(config.get_int("simulation.p", base.p));
  base.n_modifiers =
      static_cast<int>(config.get_int("simulation.modifiers", base.n_modifiers));
  base.n_prognostic =
      static_cast<int>(config.get_int("simulation.prognostic", base.n_prognostic));
  base.n_confounders =
      static_cast<int>(config.get_int("simulation.confounders", base.n_confounders));
  base.rho = config.get_double("simulation.rho", base.rho);
  base.snr = config.get_double("simulation.snr", base.snr);
  base.a = config.get_double("simulation.a", base.a);
  base.setting = parse_sim_setting(config.get_string(
      "simulation.setting", base.setting == SimSetting::Linear ? "linear" : "nonlinear"));
  return base;
}

const std::vector<std::string> kSimulationKeys = {
    "simulation.n",   "simulation.p",   "simulation.modifiers", "simulation.prognostic",
    "simulation.confounders", "simulation.rho", "simulation.snr", "simulation.a",
    "simulation.setting"};

std::vector<std::string> with_simulation_keys(std::vector<std::string> extra) {
  extra.insert(extra.end(), kSimulationKeys.begin(), kSimulationKeys.end());
  return extra;
}

}  // namespace

PropensitySpec parse_propensity(const std::string& s) {
  if (s == "estimated") return PropensitySpec::estimated();
  if (s.rfind("known:", 0) == 0) {
    const double value = std::stod(s.substr(6));
    if (!(value > 0.0 && value < 1.0)) {
      throw std::invalid_argument("propensity value must lie in (0, 1)");
    }
    return PropensitySpec::known_value(value);
  }
  throw std::invalid_argument("propensity must be 'estimated' or 'known:<value>'");
}

MethodSpec make_method(const std::string& name, const MethodContext& context) {
  MethodSpec spec;
  spec.name = name;
  spec.selector = context.selector;
  spec.B = context.B;
  spec.m_fraction = context.m_fraction;
  spec.delta = context.delta;
  spec.q_cap_fraction = context.q_cap_fraction;
  spec.grid_size = context.grid_size;
  spec.pseudo_folds = context.pseudo_folds;
  spec.selector_gbt = context.selector_gbt;
  if (name == "causal_stabsel") {
    spec.kind = MethodKind::CausalStabsel;
    spec.cate = context.stabsel_cate;
  } else if (name == "oracle_ipss") {
    spec.kind = MethodKind::OracleIpss;
  } else if (name == "naive_ipss") {
    spec.kind = MethodKind::NaiveIpss;
    spec.cate = context.pseudo_cate;
  } else if (name == "honest_ipss") {
    spec.kind = MethodKind::NaiveIpss;
    spec.honest_split = true;
    spec.cate = context.pseudo_cate;
  } else if (name == "lasso_cv") {
    spec.kind = MethodKind::LassoCv;
    spec.cate = context.pseudo_cate;
  } else if (name == "bh") {
    spec.kind = MethodKind::BhOls;
    spec.cate = context.pseudo_cate;
  } else if (name == "topk_importance") {
    spec.kind = MethodKind::TopkImportance;
    spec.cate = context.pseudo_cate;
    spec.pseudo_folds = context.importance_folds;
  } else {
    throw std::invalid_argument("unknown method name: " + name);
  }
  return spec;
}

ExperimentSpec resolve_experiment(const std::string& preset, const Config& config) {
  config.require_known_keys(with_simulation_keys({
      "stabsel.B", "stabsel.m_fraction", "stabsel.grid_size", "stabsel.selector",
      "ipss.delta", "ipss.q_cap_fraction",
      "cate.method", "cate.base", "cate.propensity", "cate.clip_low", "cate.clip_high",
      "cate.dr_folds", "cate.winsorize",
      "pseudo.method", "pseudo.base", "pseudo.folds", "pseudo.importance_folds",
      "experiment.trials", "experiment.alphas", "experiment.methods", "experiment.seed",
      "experiment.threads"}));

  ExperimentSpec spec;
  bool nonlinear = false;
  if (preset == "paper-linear-default" || preset.empty()) {
    spec.sim = SimConfig::linear_default();
  } else if (preset == "paper-nonlinear-default") {
    spec.sim = SimConfig::nonlinear_default();
    nonlinear = true;
  } else {
    throw std::invalid_argument("unknown preset: " + preset);
  }
  spec.sim = sim_from_config(config, spec.sim);
  nonlinear = spec.sim.setting == SimSetting::Nonlinear;

  MethodContext context;
  context.selector = parse_selector_kind(
      config.get_string("stabsel.selector", nonlinear ? "gbt" : "lasso"));
  context.B = static_cast<int>(config.get_int("stabsel.B", 100));
  context.m_fraction = config.get_double("stabsel.m_fraction", 0.5);
  context.grid_size = static_cast<int>(config.get_int("stabsel.grid_size", 25));
  context.delta = config.get_double("ipss.delta", 1.0);
  context.q_cap_fraction = config.get_double("ipss.q_cap_fraction", 0.5);

  // Randomized designs use the known assignment probability; confounded
  // designs estimate the propensity.
  const std::string default_propensity =
      spec.sim.n_confounders == 0 ? "known:0.5" : "estimated";

  CateSpec stabsel_cate;
  stabsel_cate.method = parse_cate_method(config.get_string("cate.method", "dr"));
  stabsel_cate.base =
      parse_base_learner(config.get_string("cate.base", nonlinear ? "gbt" : "ridge"));
  stabsel_cate.propensity =
      parse_propensity(config.get_string("cate.propensity", default_propensity));
  stabsel_cate.clip.low = config.get_double("cate.clip_low", 0.01);
  stabsel_cate.clip.high = config.get_double("cate.clip_high", 0.99);
  stabsel_cate.dr_folds = static_cast<int>(config.get_int("cate.dr_folds", 2));
  stabsel_cate.winsorize_pseudo = config.get_bool("cate.winsorize", false);
  context.stabsel_cate = stabsel_cate;

  CateSpec pseudo_cate = stabsel_cate;
  pseudo_cate.method = parse_cate_method(config.get_string("pseudo.method", "x"));
  pseudo_cate.base =
      parse_base_learner(config.get_string("pseudo.base", nonlinear ? "gbt" : "ridge"));
  context.pseudo_cate = pseudo_cate;
  context.pseudo_folds = static_cast<int>(config.get_int("pseudo.folds", 5));
  context.importance_folds =
      static_cast<int>(config.get_int("pseudo.importance_folds", 10));

  const std::vector<std::string> method_names = config.get_string_array(
      "experiment.methods",
      {"causal_stabsel", "naive_ipss", "lasso_cv", "bh", "topk_importance"});
  for (const auto& name : method_names) spec.methods.push_back(make_method(name, context));

  spec.alphas = config.get_double_array("experiment.alphas", spec.alphas);
  spec.trials = static_cast<int>(config.get_int("experiment.trials", 200));
  spec.seed = RngSpec{static_cast<std::uint64_t>(config.get_int("experiment.seed", 0)), 0};
  spec.threads = static_cast<unsigned>(config.get_int("experiment.threads", 0));
  return spec;
}

int cmd_select(const SelectOptions& opts) {
  if (opts.target_efp.has_value() == opts.fdr_alpha.has_value()) {
    std::cerr << "select: exactly one of --target-efp and --fdr is required\n";
    return kExitUsage;
  }
  const bool application = opts.preset == "application";
  if (!opts.preset.empty() && !application) {
    std::cerr << "select: unknown preset '" << opts.preset << "'\n";
    return kExitUsage;
  }

  Dataset data;
  try {
    data = load_csv(opts.csv_path, opts.outcome, opts.treatment);
  } catch (const ColumnNotFoundError& e) {
    std::cerr << "select: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "select: " << e.what() << '\n';
    return kExitFailure;
  }

  try {
    if (!opts.no_standardize) {
      data.X = standardize_columns(data.X).X;
    }

    CateSpec cate;
    cate.method = parse_cate_method(opts.cate.value_or("dr"));
    cate.base = parse_base_learner(opts.base.value_or("ridge"));
    cate.propensity = parse_propensity(opts.propensity.value_or("estimated"));
    cate.clip.low = opts.clip_low.value_or(application ? 0.10 : 0.01);
    cate.clip.high = opts.clip_high.value_or(application ? 0.90 : 0.99);
    cate.dr_folds = opts.dr_folds.value_or(application ? 5 : 2);
    cate.winsorize_pseudo = opts.winsorize.value_or(application);

    StabselParams params;
    params.B = opts.B.value_or(application ? 500 : 100);
    params.m = opts.m.value_or(application ? data.n() / 4 : data.n() / 2);
    params.grid_size = opts.grid_size.value_or(25);
    params.threads = resolve_threads(opts.threads);

    IpssParams ipss;
    ipss.delta = opts.delta.value_or(application ? 2.0 : 1.0);
    ipss.q_cap_fraction = opts.q_cap_fraction.value_or(0.5);

    const SelectorKind selector = parse_selector_kind(opts.selector.value_or("lasso"));
    const RngSpec rng{opts.seed, 0};

    StabselResult result = run_causal_stabsel(data, selector, cate, params, rng);
    EfpReport report = ipss_report(result.curves, result.events, result.grid, ipss);

    SelectionSet selected = opts.target_efp.has_value()
                                ? select_at_target(report.efp, *opts.target_efp)
                                : select_fdr(report.efp, *opts.fdr_alpha);

    ensure_dir(opts.out_dir);
    write_efp_csv(join_path(opts.out_dir, "efp_report.csv"), report, data.feature_names);

    std::vector<int> order(static_cast<std::size_t>(data.p()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return report.efp[a] < report.efp[b]; });
    std::printf("%-4s %-24s %12s %12s %s\n", "rank", "feature", "efp", "score", "selected");
    for (std::size_t r = 0; r < order.size(); ++r) {
      const int j = order[r];
      std::printf("%-4zu %-24s %12.5g %12.5g %s\n", r + 1,
                  data.feature_names[static_cast<std::size_t>(j)].c_str(), report.efp[j],
                  report.integral_scores[j], selected.contains(j) ? "*" : "");
    }
    std::printf("selected %d of %d features (bound constant C = %.6g)\n", selected.size(),
                data.p(), report.bound_constant);
    return kExitSuccess;
  } catch (const std::exception& e) {
    std::cerr << "select: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cmd_simulate(const SimulateOptions& opts) {
  try {
    Config config;
    if (!opts.config_path.empty()) config = Config::parse_file(opts.config_path);
    ExperimentSpec spec = resolve_experiment(opts.preset, config);
    if (opts.trials) spec.trials = *opts.trials;
    if (opts.seed) spec.seed = RngSpec{*opts.seed, 0};
    if (opts.threads != 0) spec.threads = opts.threads;
    if (spec.threads == 0) spec.threads = default_thread_count();

    std::mutex log_mutex;
    int done = 0;
    if (!opts.quiet) {
      spec.on_trial = [&](const TrialRecord& record) {
        std::lock_guard<std::mutex> lock(log_mutex);
        double seconds = 0.0;
        for (const auto& [name, s] : record.seconds) seconds += s;
        std::fprintf(stderr, "trial %d finished (%d/%d, %.1fs)\n", record.trial_id, ++done,
                     spec.trials, seconds);
      };
    }

    ensure_dir(opts.out_dir);
    if (opts.dump_data) {
      // Reproduces exactly the dataset trial 0 will see.
      SimConfig first = spec.sim;
      first.seed = spec.seed.substream(0).substream(0);
      dump_simulated_csv(join_path(opts.out_dir, "trial0"), generate(first));
    }

    ExperimentResult result = run_experiment(spec);
    const std::string csv_path = join_path(opts.out_dir, "results.csv");
    write_results_csv(csv_path, result.table);
    if (opts.svg) {
      // Rendered from the re-read CSV so the artifact is a pure function of it.
      const std::string svg = render_results_svg(read_results_csv(csv_path));
      std::ofstream out(join_path(opts.out_dir, "curves.svg"));
      out << svg;
    }
    if (!opts.quiet) {
      for (const auto& row : result.table) {
        std::printf("%-18s alpha=%.3f tpr=%.3f (se %.3f) fdr=%.3f (se %.3f) selected=%.2f\n",
                    row.method.c_str(), row.alpha, row.mean_tpr, row.se_tpr, row.mean_fdr,
                    row.se_fdr, row.mean_selected);
      }
    }
    return kExitSuccess;
  } catch (const std::invalid_argument& e) {
    std::cerr << "simulate: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "simulate: " << e.what() << '\n';
    return kExitFailure;
  }
}

namespace {

int run_variance_bound(const Config& config, const ValidateOptions& opts) {
  config.require_known_keys(with_simulation_keys(
      {"variance_bound.B", "variance_bound.m", "variance_bound.replications",
       "variance_bound.grid_size", "variance_bound.selector"}));
  SimConfig sim = SimConfig::linear_default();
  sim.n = 500;
  sim.p = 50;
  sim.n_modifiers = 5;
  sim.n_prognostic = 5;
  VarianceBoundConfig vb;
  vb.sim = sim_from_config(config, sim);
  vb.B = static_cast<int>(config.get_int("variance_bound.B", 25));
  vb.m = static_cast<int>(config.get_int("variance_bound.m", 50));
  vb.replications = static_cast<int>(config.get_int("variance_bound.replications", 200));
  vb.grid_size = static_cast<int>(config.get_int("variance_bound.grid_size", 15));
  vb.selector = parse_selector_kind(config.get_string("variance_bound.selector", "lasso"));
  vb.threads = resolve_threads(opts.threads);
  vb.seed = RngSpec{opts.seed.value_or(0), 0};

  BoundCheckReport report = validate_variance_bound(vb);
  ensure_dir(opts.out_dir);
  write_bound_csv(join_path(opts.out_dir, "variance_bound.csv"), report);
  if (!opts.quiet) {
    std::printf("variance bound %.6g, %d cells checked, %d violations beyond slack -> %s\n",
                report.bound, static_cast<int>(report.rows.size()), report.violations,
                report.pass() ? "pass" : "FAIL");
  }
  return report.pass() ? kExitSuccess : kExitFailure;
}

int run_bias_decay(const Config& config, const ValidateOptions& opts) {
  config.require_known_keys(with_simulation_keys(
      {"bias_decay.n_small", "bias_decay.n_large", "bias_decay.m", "bias_decay.B",
       "bias_decay.reference_B", "bias_decay.reference_replications",
       "bias_decay.replications", "bias_decay.grid_size", "bias_decay.use_true_tau",
       "bias_decay.selector", "bias_decay.cate_method", "bias_decay.cate_base"}));
  SimConfig sim = SimConfig::linear_default();
  sim.p = 20;
  sim.n_modifiers = 3;
  sim.n_prognostic = 3;
  BiasDecayConfig bd;
  bd.sim = sim_from_config(config, sim);
  bd.n_small = static_cast<int>(config.get_int("bias_decay.n_small", 250));
  bd.n_large = static_cast<int>(config.get_int("bias_decay.n_large", 1000));
  bd.m = static_cast<int>(config.get_int("bias_decay.m", 50));
  bd.B = static_cast<int>(config.get_int("bias_decay.B", 25));
  bd.reference_B = static_cast<int>(config.get_int("bias_decay.reference_B", 100));
  bd.reference_replications =
      static_cast<int>(config.get_int("bias_decay.reference_replications", 20));
  bd.replications = static_cast<int>(config.get_int("bias_decay.replications", 100));
  bd.grid_size = static_cast<int>(config.get_int("bias_decay.grid_size", 15));
  bd.use_true_tau = config.get_bool("bias_decay.use_true_tau", false);
  bd.selector = parse_selector_kind(config.get_string("bias_decay.selector", "lasso"));
  bd.cate.method = parse_cate_method(config.get_string("bias_decay.cate_method", "dr"));
  bd.cate.base = parse_base_learner(config.get_string("bias_decay.cate_base", "ridge"));
  bd.cate.propensity = bd.sim.n_confounders == 0 ? PropensitySpec::known_value(0.5)
                                                 : PropensitySpec::estimated();
  bd.threads = resolve_threads(opts.threads);
  bd.seed = RngSpec{opts.seed.value_or(0), 0};

  BiasDecayReport report = validate_bias_decay(bd);
  ensure_dir(opts.out_dir);
  write_bias_csv(join_path(opts.out_dir, "bias_decay.csv"), report);
  if (!opts.quiet) {
    std::printf("gap at n=%d: %.5f (se %.5f); gap at n=%d: %.5f (se %.5f) -> %s\n",
                report.n_small, report.gap_small, report.se_small, report.n_large,
                report.gap_large, report.se_large, report.pass() ? "pass" : "FAIL");
  }
  return report.pass() ? kExitSuccess : kExitFailure;
}

int run_efp_calibration(const Config& config, const ValidateOptions& opts) {
  config.require_known_keys(with_simulation_keys(
      {"efp_calibration.targets", "efp_calibration.trials", "efp_calibration.B",
       "efp_calibration.m_fraction", "efp_calibration.selector", "efp_calibration.delta",
       "efp_calibration.grid_size"}));
  SimConfig sim = SimConfig::linear_default();
  sim.p = 50;
  sim.n_modifiers = 5;
  sim.n_prognostic = 5;
  EfpCalibrationConfig ec;
  ec.sim = sim_from_config(config, sim);
  ec.targets = config.get_double_array("efp_calibration.targets", {0.5, 1.0, 2.0});
  ec.trials = static_cast<int>(config.get_int("efp_calibration.trials", 100));

  MethodContext context;
  context.selector =
      parse_selector_kind(config.get_string("efp_calibration.selector", "lasso"));
  context.B = static_cast<int>(config.get_int("efp_calibration.B", 50));
  context.m_fraction = config.get_double("efp_calibration.m_fraction", 0.5);
  context.delta = config.get_double("efp_calibration.delta", 1.0);
  context.grid_size = static_cast<int>(config.get_int("efp_calibration.grid_size", 25));
  CateSpec cate;
  cate.propensity = ec.sim.n_confounders == 0 ? PropensitySpec::known_value(0.5)
                                              : PropensitySpec::estimated();
  context.stabsel_cate = cate;
  ec.method = make_method("causal_stabsel", context);
  ec.threads = resolve_threads(opts.threads);
  ec.seed = RngSpec{opts.seed.value_or(0), 0};

  EfpCalibrationReport report = validate_efp_calibration(ec);
  ensure_dir(opts.out_dir);
  write_efp_calibration_csv(join_path(opts.out_dir, "efp_calibration.csv"), report);
  if (!opts.quiet) {
    for (std::size_t i = 0; i < report.targets.size(); ++i) {
      std::printf("target %.2f: mean FP %.4f (se %.4f)\n", report.targets[i],
                  report.mean_fp[i], report.se_fp[i]);
    }
    std::printf("efp calibration -> %s\n", report.pass() ? "pass" : "FAIL");
  }
  return report.pass() ? kExitSuccess : kExitFailure;
}

}  // namespace

int cmd_validate(const ValidateOptions& opts) {
  try {
    Config config;
    if (!opts.config_path.empty()) config = Config::parse_file(opts.config_path);
    if (opts.check == "variance-bound") return run_variance_bound(config, opts);
    if (opts.check == "bias-decay") return run_bias_decay(config, opts);
    if (opts.check == "efp-calibration") return run_efp_calibration(config, opts);
    std::cerr << "validate: unknown check '" << opts.check << "'\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validate: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "validate: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace cstab

#include <CLI11.hpp>
#include <optional>

#include "causalstab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"causalstab: effect modifier discovery with false discovery control"};
  app.require_subcommand(1);

  cstab::SelectOptions select;
  auto* sel = app.add_subcommand("select", "Select effect modifiers from a CSV dataset");
  sel->add_option("data", select.csv_path, "input CSV file")->required();
  sel->add_option("--outcome", select.outcome, "outcome column name");
  sel->add_option("--treatment", select.treatment, "treatment column name");
  sel->add_option("--target-efp", select.target_efp,
                  "select features with efp score at most this budget");
  sel->add_option("--fdr", select.fdr_alpha, "target FDR level in [0, 0.5]");
  sel->add_option("--preset", select.preset, "named preset (application)");
  sel->add_option("--cate", select.cate, "CATE estimator: t, x, or dr");
  sel->add_option("--base-learner", select.base, "base learner: ridge or gbt");
  sel->add_option("--selector", select.selector, "base selector: lasso or gbt");
  sel->add_option("--propensity", select.propensity, "'estimated' or 'known:<value>'");
  sel->add_option("--B", select.B, "number of complementary pairs");
  sel->add_option("--m", select.m, "subsample size (default floor(n/2))");
  sel->add_option("--delta", select.delta, "measure exponent for lambda^-delta");
  sel->add_option("--q-cap", select.q_cap_fraction, "q-hat truncation fraction of p");
  sel->add_option("--grid-size", select.grid_size, "lambda grid size");
  sel->add_option("--clip-low", select.clip_low, "propensity clip lower bound");
  sel->add_option("--clip-high", select.clip_high, "propensity clip upper bound");
  sel->add_option("--dr-folds", select.dr_folds, "internal DR cross-fit folds");
  sel->add_option("--winsorize", select.winsorize, "winsorize DR pseudo-outcomes");
  sel->add_flag("--no-standardize", select.no_standardize,
                "skip covariate standardization");
  sel->add_option("--seed", select.seed, "master seed");
  sel->add_option("--threads", select.threads, "worker threads (0 = all cores)");
  sel->add_option("--out", select.out_dir, "output directory");

  cstab::SimulateOptions simulate;
  auto* sim = app.add_subcommand("simulate", "Run a simulation experiment");
  sim->add_option("--config", simulate.config_path, "TOML-style experiment config");
  sim->add_option("--preset", simulate.preset,
                  "paper-linear-default or paper-nonlinear-default");
  sim->add_option("--trials", simulate.trials, "number of Monte Carlo trials");
  sim->add_option("--seed", simulate.seed, "master seed");
  sim->add_option("--threads", simulate.threads, "worker threads (0 = all cores)");
  sim->add_option("--out", simulate.out_dir, "output directory");
  sim->add_flag("--svg", simulate.svg, "also render TPR/FDR curves as SVG");
  sim->add_flag("--quiet", simulate.quiet, "suppress per-trial log lines");
  sim->add_flag("--dump-data", simulate.dump_data,
                "write the first trial's dataset and truth as CSV");

  cstab::ValidateOptions validate;
  auto* val = app.add_subcommand("validate", "Monte Carlo checks of the theoretical bounds");
  val->add_option("--check", validate.check,
                  "variance-bound, bias-decay, or efp-calibration")
      ->required();
  val->add_option("--config", validate.config_path, "TOML-style validator config");
  val->add_option("--seed", validate.seed, "master seed");
  val->add_option("--threads", validate.threads, "worker threads (0 = all cores)");
  val->add_option("--out", validate.out_dir, "output directory");
  val->add_flag("--quiet", validate.quiet, "suppress summary output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cstab::kExitUsage;
  }

  if (sel->parsed()) return cstab::cmd_select(select);
  if (sim->parsed()) return cstab::cmd_simulate(simulate);
  if (val->parsed()) return cstab::cmd_validate(validate);
  return cstab::kExitUsage;
}

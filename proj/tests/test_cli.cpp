#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "causalstab/bench.hpp"
#include "causalstab/cli.hpp"
#include "causalstab/config.hpp"
#include "causalstab/csv.hpp"
#include "causalstab/simgen.hpp"
#include "causalstab/svg.hpp"

using namespace cstab;

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

// Runs the built binary; stdout+stderr captured through a temp file.
RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string capture =
      (fs::temp_directory_path() / ("cli_out_" + std::to_string(counter++) + ".txt")).string();
  const std::string command =
      std::string(CAUSALSTAB_CLI_PATH) + " " + args + " > " + capture + " 2>&1";
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(capture);
  std::stringstream ss;
  ss << in.rdbuf();
  result.output = ss.str();
  return result;
}

std::string fresh_dir(const std::string& tag) {
  const std::string dir = (fs::temp_directory_path() / ("clitest_" + tag)).string();
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Planted-signal fixture: tau = 2 x1 exactly, mild noise, RCT assignment.
std::string write_planted_fixture(const std::string& dir) {
  Dataset data;
  const int n = 600, p = 6;
  data.X = toeplitz_gaussian(n, p, 0.0, RngSpec{201, 0});
  Rng gen(RngSpec{201, 1});
  data.y.resize(n);
  data.z.resize(n);
  for (int i = 0; i < n; ++i) {
    data.z[i] = gen.bernoulli(0.5) ? 1 : 0;
    data.y[i] = data.z[i] * 2.0 * data.X(i, 0) + 0.5 * gen.normal();
  }
  data.feature_names.clear();
  for (int j = 0; j < p; ++j) data.feature_names.push_back("x" + std::to_string(j + 1));
  const std::string path = dir + "/planted.csv";
  write_csv(path, data);
  return path;
}

}  // namespace

TEST_CASE("config: parse, dump, reparse round trip") {
  const std::string text =
      "# experiment configuration\n"
      "[simulation]\n"
      "n = 500\n"
      "rho = 0.5\n"
      "setting = \"linear\"  # comment after value\n"
      "\n"
      "[experiment]\n"
      "alphas = [0.1, 0.2, 0.3]\n"
      "methods = [\"causal_stabsel\", \"bh\"]\n"
      "trials = 50\n"
      "quiet = false\n";
  Config parsed = Config::parse_string(text);
  CHECK(parsed.get_int("simulation.n", 0) == 500);
  CHECK(parsed.get_double("simulation.rho", 0) == 0.5);
  CHECK(parsed.get_string("simulation.setting", "") == "linear");
  CHECK(parsed.get_bool("experiment.quiet", true) == false);
  CHECK(parsed.get_double_array("experiment.alphas", {}) ==
        std::vector<double>{0.1, 0.2, 0.3});
  CHECK(parsed.get_string_array("experiment.methods", {}) ==
        std::vector<std::string>{"causal_stabsel", "bh"});

  Config reparsed = Config::parse_string(parsed.dump());
  CHECK(reparsed == parsed);
  CHECK(reparsed.dump() == parsed.dump());
}

TEST_CASE("config: errors") {
  CHECK_THROWS_WITH(Config::parse_string("x 5\n"), doctest::Contains("key = value"));
  CHECK_THROWS_WITH(Config::parse_string("[s]\nk = 1\nk = 2\n"),
                    doctest::Contains("duplicate"));
  CHECK_THROWS_AS(Config::parse_string("k = \"unterminated\n"), std::invalid_argument);
  Config config = Config::parse_string("[a]\nb = 1\n");
  CHECK_THROWS_WITH(config.require_known_keys({"a.c"}), doctest::Contains("unknown key 'a.b'"));
  CHECK_NOTHROW(config.require_known_keys({"a.b"}));
  CHECK_THROWS_AS(config.get_string("a.b", ""), std::invalid_argument);  // type mismatch
}

TEST_CASE("resolve_experiment: presets and config overrides") {
  ExperimentSpec linear = resolve_experiment("paper-linear-default", Config{});
  CHECK(linear.sim.n == 1000);
  CHECK(linear.sim.p == 100);
  CHECK(linear.sim.setting == SimSetting::Linear);
  CHECK(linear.methods.size() == 5);
  CHECK(linear.methods[0].selector == SelectorKind::LassoPath);
  CHECK(linear.methods[0].cate.propensity.known);  // RCT design

  ExperimentSpec nonlinear = resolve_experiment("paper-nonlinear-default", Config{});
  CHECK(nonlinear.sim.p == 50);
  CHECK(nonlinear.methods[0].selector == SelectorKind::ImportanceThreshold);
  CHECK(nonlinear.methods[0].cate.base == BaseLearner::Gbt);

  Config override_config = Config::parse_string(
      "[simulation]\nconfounders = 5\n[experiment]\nmethods = [\"causal_stabsel\"]\n");
  ExperimentSpec confounded = resolve_experiment("paper-linear-default", override_config);
  CHECK(confounded.sim.n_confounders == 5);
  CHECK_FALSE(confounded.methods[0].cate.propensity.known);  // estimated when confounded

  Config bad = Config::parse_string("[simulation]\nbogus = 1\n");
  CHECK_THROWS_WITH(resolve_experiment("paper-linear-default", bad),
                    doctest::Contains("unknown key"));
}

TEST_CASE("parse_propensity: both forms and errors") {
  CHECK_FALSE(parse_propensity("estimated").known);
  PropensitySpec known = parse_propensity("known:0.4");
  CHECK(known.known);
  CHECK(known.value == 0.4);
  CHECK_THROWS_AS(parse_propensity("known:1.5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_propensity("coinflip"), std::invalid_argument);
}

TEST_CASE("svg: pure function of the results CSV") {
  std::vector<ResultRow> table;
  for (double alpha : {0.1, 0.2, 0.3}) {
    ResultRow row;
    row.method = "causal_stabsel";
    row.alpha = alpha;
    row.mean_tpr = 0.5 + alpha;
    row.se_tpr = 0.01;
    row.mean_fdr = alpha * 0.8;
    row.se_fdr = 0.01;
    row.mean_selected = 4;
    row.trials = 7;
    table.push_back(row);
    row.method = "bh";
    row.mean_fdr = alpha * 1.9;
    table.push_back(row);
  }
  const std::string direct = render_results_svg(table);
  CHECK(direct.find("polyline") != std::string::npos);
  CHECK(direct.find("stroke-dasharray") != std::string::npos);  // the diagonal

  const std::string path = (fs::temp_directory_path() / "svg_purity.csv").string();
  write_results_csv(path, table);
  const std::string regenerated = render_results_svg(read_results_csv(path));
  CHECK(regenerated == direct);
}

TEST_CASE("cli: help for every subcommand") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("select --help").exit_code == 0);
  CHECK(run_cli("simulate --help").exit_code == 0);
  CHECK(run_cli("validate --help").exit_code == 0);
}

TEST_CASE("cli select: planted signal is found within an efp budget of one") {
  const std::string dir = fresh_dir("select");
  const std::string csv = write_planted_fixture(dir);
  RunResult run = run_cli("select " + csv +
                          " --target-efp 1 --propensity known:0.5 --B 40 --seed 3"
                          " --threads 2 --out " + dir);
  CHECK(run.exit_code == 0);

  // x1 tops the efp ranking in the written report.
  std::ifstream report(dir + "/efp_report.csv");
  std::string line;
  std::getline(report, line);
  CHECK(line == "name,integral_score,efp");
  double best_efp = 1e9;
  std::string best_name;
  while (std::getline(report, line)) {
    std::stringstream ss(line);
    std::string name, score, efp;
    std::getline(ss, name, ',');
    std::getline(ss, score, ',');
    std::getline(ss, efp, ',');
    if (std::stod(efp) < best_efp) {
      best_efp = std::stod(efp);
      best_name = name;
    }
  }
  CHECK(best_name == "x1");
  CHECK(best_efp <= 1.0);
  CHECK(run.output.find("x1") != std::string::npos);
}

TEST_CASE("cli select: tree-importance selector runs end to end") {
  const std::string dir = fresh_dir("select_gbt");
  const std::string csv = write_planted_fixture(dir);
  RunResult run = run_cli("select " + csv +
                          " --selector gbt --target-efp 2 --propensity known:0.5"
                          " --B 10 --grid-size 10 --seed 4 --threads 2 --out " + dir);
  CHECK(run.exit_code == 0);
  CHECK(run.output.find("x1") != std::string::npos);
}

TEST_CASE("cli select: fdr zero selects nothing but exits cleanly") {
  const std::string dir = fresh_dir("select_fdr0");
  const std::string csv = write_planted_fixture(dir);
  RunResult run = run_cli("select " + csv +
                          " --fdr 0 --propensity known:0.5 --B 10 --seed 3 --threads 2"
                          " --out " + dir);
  CHECK(run.exit_code == 0);
  CHECK(run.output.find("selected 0 of") != std::string::npos);
}

TEST_CASE("cli select: usage errors exit with code 2") {
  const std::string dir = fresh_dir("select_usage");
  const std::string csv = write_planted_fixture(dir);
  // Missing treatment column in the file.
  CHECK(run_cli("select " + csv + " --treatment w --target-efp 1 --out " + dir).exit_code == 2);
  // Neither and both selection rules.
  CHECK(run_cli("select " + csv + " --out " + dir).exit_code == 2);
  CHECK(run_cli("select " + csv + " --target-efp 1 --fdr 0.1 --out " + dir).exit_code == 2);
  // Unknown flag.
  CHECK(run_cli("select " + csv + " --target-efp 1 --no-such-flag").exit_code == 2);
}

TEST_CASE("cli simulate: same seed twice gives byte-identical results") {
  const std::string dir_a = fresh_dir("sim_a");
  const std::string dir_b = fresh_dir("sim_b");
  const std::string config_path = dir_a + "/exp.toml";
  {
    std::ofstream out(config_path);
    out << "[simulation]\nn = 150\np = 8\nmodifiers = 2\nprognostic = 2\n"
        << "[stabsel]\nB = 8\ngrid_size = 8\n"
        << "[experiment]\ntrials = 2\nalphas = [0.1, 0.2]\n"
        << "methods = [\"causal_stabsel\", \"bh\"]\n";
  }
  RunResult a = run_cli("simulate --config " + config_path + " --seed 9 --threads 2 --svg --quiet --out " + dir_a);
  RunResult b = run_cli("simulate --config " + config_path + " --seed 9 --threads 1 --svg --quiet --out " + dir_b);
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  CHECK(read_file(dir_a + "/results.csv") == read_file(dir_b + "/results.csv"));
  CHECK(read_file(dir_a + "/curves.svg") == read_file(dir_b + "/curves.svg"));
  CHECK(read_file(dir_a + "/results.csv").rfind("method,alpha,", 0) == 0);
}

TEST_CASE("cli simulate: data dump writes the first trial's dataset and truth") {
  const std::string dir = fresh_dir("sim_dump");
  const std::string config_path = dir + "/exp.toml";
  {
    std::ofstream out(config_path);
    out << "[simulation]\nn = 80\np = 6\nmodifiers = 2\nprognostic = 2\n"
        << "[stabsel]\nB = 4\ngrid_size = 6\n"
        << "[experiment]\ntrials = 1\nalphas = [0.2]\nmethods = [\"causal_stabsel\"]\n";
  }
  RunResult run = run_cli("simulate --config " + config_path +
                          " --seed 21 --threads 1 --quiet --dump-data --out " + dir);
  CHECK(run.exit_code == 0);

  Dataset dumped = load_csv(dir + "/trial0_data.csv", "y", "z");
  CHECK(dumped.n() == 80);
  CHECK(dumped.p() == 6);

  const std::string truth = read_file(dir + "/trial0_truth.csv");
  CHECK(truth.rfind("feature,beta,gamma,modifier,prognostic,confounder,sigma2", 0) == 0);
  int modifier_count = 0;
  std::stringstream ss(truth);
  std::string line;
  std::getline(ss, line);  // header
  while (std::getline(ss, line)) {
    std::stringstream cells(line);
    std::string cell;
    for (int c = 0; c < 4; ++c) std::getline(cells, cell, ',');
    modifier_count += cell == "1" ? 1 : 0;
  }
  CHECK(modifier_count == 2);
}

TEST_CASE("cli simulate: unknown preset and unknown config key are usage errors") {
  const std::string dir = fresh_dir("sim_usage");
  CHECK(run_cli("simulate --preset bogus --out " + dir).exit_code == 2);
  const std::string config_path = dir + "/bad.toml";
  {
    std::ofstream out(config_path);
    out << "[experiment]\nmystery = 1\n";
  }
  CHECK(run_cli("simulate --config " + config_path + " --out " + dir).exit_code == 2);
}

TEST_CASE("cli validate: tiny variance-bound run passes with a report") {
  const std::string dir = fresh_dir("validate_vb");
  const std::string config_path = dir + "/vb.toml";
  {
    std::ofstream out(config_path);
    out << "[simulation]\nn = 120\np = 6\nmodifiers = 2\nprognostic = 2\n"
        << "[variance_bound]\nB = 5\nm = 20\nreplications = 50\ngrid_size = 6\n";
  }
  RunResult run = run_cli("validate --check variance-bound --config " + config_path +
                          " --seed 5 --threads 2 --out " + dir);
  CHECK(run.exit_code == 0);
  const std::string report = read_file(dir + "/variance_bound.csv");
  CHECK(report.rfind("j,lambda,emp_var,bound,slack,violated", 0) == 0);

  CHECK(run_cli("validate --check nonsense --out " + dir).exit_code == 2);
}

TEST_CASE("cli validate: bias-decay stub config passes quickly") {
  const std::string dir = fresh_dir("validate_bd");
  const std::string config_path = dir + "/bd.toml";
  {
    std::ofstream out(config_path);
    out << "[simulation]\np = 8\nmodifiers = 2\nprognostic = 2\n"
        << "[bias_decay]\nn_small = 100\nn_large = 200\nm = 20\nB = 5\n"
        << "reference_B = 20\nreference_replications = 5\nreplications = 100\n"
        << "grid_size = 6\nuse_true_tau = true\n";
  }
  RunResult run = run_cli("validate --check bias-decay --config " + config_path +
                          " --seed 5 --threads 2 --out " + dir);
  CHECK(run.exit_code == 0);
  CHECK(read_file(dir + "/bias_decay.csv").rfind("n,gap,se", 0) == 0);
}

// mbt: simulation and verification toolkit for multiplayer bilateral trade.
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mbt/errors.hpp"
#include "mbt/runner.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  bool full = false;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "JSON experiment config file");
  sub->add_option("--seed", opts.seed, "master RNG seed");
  sub->add_option("--trials", opts.trials, "Monte Carlo trials per cell");
  sub->add_option("--threads", opts.threads, "worker threads (results identical)");
  sub->add_option("--out", opts.out_dir, "output directory");
  sub->add_flag("--full", opts.full, "keep the full trial count at n = 10000");
}

mbt::ExperimentConfig load_config(const CommonOpts& opts) {
  mbt::ExperimentConfig config;
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in)
      throw mbt::ConfigError("cannot read config file " + opts.config_path);
    nlohmann::json j;
    in >> j;
    config = mbt::ExperimentConfig::from_json(j);
  }
  if (opts.seed) config.seed = *opts.seed;
  if (opts.trials) config.trials = *opts.trials;
  if (opts.threads) config.threads = *opts.threads;
  if (opts.out_dir) config.out_dir = *opts.out_dir;
  if (opts.full) config.full = true;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and verification toolkit for multiplayer bilateral trade"};
  app.require_subcommand(1);

  CommonOpts table1_opts, figures_opts, hardness_opts, verify_opts, scaling_opts;

  CLI::App* table1 = app.add_subcommand(
      "table1", "Forced-trade IR/efficiency table across priors and n");
  add_common(table1, table1_opts);

  CLI::App* figures = app.add_subcommand(
      "figures", "Grouped-bar SVG figures of IR probability and efficiency");
  add_common(figures, figures_opts);

  CLI::App* hardness = app.add_subcommand(
      "hardness", "Hardness-instance closed forms vs. Monte Carlo");
  add_common(hardness, hardness_opts);
  std::vector<int> hardness_n = {2, 10, 100, 1000};
  hardness->add_option("-n,--n", hardness_n, "market sizes (even)");

  CLI::App* verify = app.add_subcommand(
      "verify", "Check a mechanism file or run the exhaustive soundness sweep");
  add_common(verify, verify_opts);
  std::string verify_file;
  int suite_n = 2, suite_k = 2;
  bool suite = false;
  verify->add_option("--file", verify_file, "mechanism JSON to check");
  verify->add_flag("--suite", suite, "run the exhaustive voting sweep");
  verify->add_option("--suite-n", suite_n, "agents per side for the sweep");
  verify->add_option("--suite-grid", suite_k, "grid resolution K for the sweep");

  CLI::App* scaling = app.add_subcommand(
      "scaling", "First-best growth across market sizes");
  add_common(scaling, scaling_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (table1->parsed()) return mbt::run_table1(load_config(table1_opts));
    if (figures->parsed()) return mbt::run_figures(load_config(figures_opts));
    if (hardness->parsed())
      return mbt::run_hardness(load_config(hardness_opts), hardness_n);
    if (scaling->parsed()) return mbt::run_scaling(load_config(scaling_opts));
    if (verify->parsed()) {
      const mbt::ExperimentConfig config = load_config(verify_opts);
      if (!verify_file.empty()) return mbt::run_verify_file(config, verify_file);
      if (suite) return mbt::run_verify_suite_cli(config, suite_n, suite_k);
      std::cerr << "error: verify needs --file or --suite\n";
      return 2;
    }
  } catch (const mbt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mbt::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

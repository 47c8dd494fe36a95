#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mbt/metrics.hpp"

namespace mbt {

inline constexpr const char* kToolVersion = "0.1.0";

// Declarative experiment description; defaults mirror the simulation study
// (sigma = 0.2, radius = 0.4, 1e6 trials, n in {5, 100, 10000}).
struct ExperimentConfig {
  std::vector<std::string> families = {"normal", "uniform", "bernoulli", "mixed"};
  std::vector<std::pair<double, double>> mu_pairs = {
      {0.6, 0.4}, {0.55, 0.45}, {0.51, 0.49}};
  std::vector<int> n_list = {5, 100, 10000};
  std::uint64_t trials = 1000000;
  std::uint64_t seed = 1;
  double sigma = 0.2;
  double radius = 0.4;
  bool full = false;  // keep the configured trial count even at n = 10000
  int threads = 1;
  std::string out_dir = "out";

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::uint64_t hash() const;

  // n = 10000 cells drop to 1e5 trials unless `full` is set.
  std::uint64_t effective_trials(int n) const;
};

// One CSV row per (family, n, mu-pair) cell; returns the full file body
// including the provenance comment. Used by both the CLI and the tests.
std::string table1_csv(const ExperimentConfig& config);

std::string hardness_csv(const ExperimentConfig& config,
                         const std::vector<int>& n_list);

std::string scaling_csv(const ExperimentConfig& config);

// Exit codes: 0 success, 1 verification failure, 2 I/O or config error.
int run_table1(const ExperimentConfig& config);
int run_figures(const ExperimentConfig& config);
int run_hardness(const ExperimentConfig& config, const std::vector<int>& n_list);
int run_scaling(const ExperimentConfig& config);

struct VerifySuiteResult {
  int mechanisms_checked = 0;
  int failures = 0;
  bool controls_rejected = false;
  nlohmann::json report;
};

// Exhaustive soundness sweep: every monotone aggregator on 2n bits, at
// tau in {0.25, 0.5, 0.75}, must have zero IC regret, SBB budget and pass
// both conformance checks; negative controls must be rejected.
VerifySuiteResult run_verify_suite(int n, int K);

// Checks a MechanismDef JSON file and emits a JSON report.
int run_verify_file(const ExperimentConfig& config, const std::string& path);
int run_verify_suite_cli(const ExperimentConfig& config, int n, int K);

}  // namespace mbt

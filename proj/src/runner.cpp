#include "mbt/runner.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mbt/errors.hpp"
#include "mbt/verify.hpp"

namespace mbt {

namespace {

std::string strf(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

std::string provenance_line(const ExperimentConfig& config) {
  return strf("# config_hash=%016llx seed=%llu version=%s\n",
              static_cast<unsigned long long>(config.hash()),
              static_cast<unsigned long long>(config.seed), kToolVersion);
}

int write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot open " << path << " for writing\n";
    return 2;
  }
  out << body;
  return out.good() ? 0 : 2;
}

int prepare_out_dir(const ExperimentConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory " << config.out_dir
              << ": " << ec.message() << "\n";
    return 2;
  }
  // config echo next to every output, for provenance
  return write_file(config.out_dir + "/config.json",
                    config.to_json().dump(2) + "\n");
}

std::string sim_row(const std::string& family, double mu_f, double mu_g,
                    const SimReport& r) {
  return strf("%s,%d,%.4f,%.4f,%llu,%llu,%.6f,%.3e,%s,%.6e,%.3e,%.6e,%.3e\n",
              family.c_str(), r.n, mu_f, mu_g,
              static_cast<unsigned long long>(r.trials),
              static_cast<unsigned long long>(r.seed), r.ir_prob, r.ir_se,
              r.efficiency_defined ? strf("%.6f", r.efficiency).c_str() : "na",
              r.gft_mean, r.gft_se, r.fb_mean, r.fb_se);
}

SimReport forced_trade_cell(const ExperimentConfig& config,
                            const std::string& family, double mu_f, double mu_g,
                            int n) {
  const Prior value_prior = make_family(family, mu_f, config.sigma, config.radius);
  const Prior cost_prior = make_family(family, mu_g, config.sigma, config.radius);
  const MechanismDef mech =
      MechanismDef::forced(value_prior.mean(), cost_prior.mean());
  return estimate_mechanism(mech, value_prior, cost_prior, n,
                            config.effective_trials(n), config.seed,
                            config.threads);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("families")) c.families = j.at("families").get<std::vector<std::string>>();
  if (j.contains("mu_pairs")) {
    c.mu_pairs.clear();
    for (const auto& p : j.at("mu_pairs"))
      c.mu_pairs.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  }
  if (j.contains("n_list")) c.n_list = j.at("n_list").get<std::vector<int>>();
  if (j.contains("trials")) c.trials = j.at("trials").get<std::uint64_t>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("sigma")) c.sigma = j.at("sigma").get<double>();
  if (j.contains("radius")) c.radius = j.at("radius").get<double>();
  if (j.contains("full")) c.full = j.at("full").get<bool>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
  if (c.trials < 1) throw ConfigError("config: trials must be >= 1");
  for (int n : c.n_list)
    if (n < 1) throw ConfigError("config: n must be >= 1");
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["families"] = families;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [f, g] : mu_pairs) pairs.push_back({f, g});
  j["mu_pairs"] = pairs;
  j["n_list"] = n_list;
  j["trials"] = trials;
  j["seed"] = seed;
  j["sigma"] = sigma;
  j["radius"] = radius;
  j["full"] = full;
  j["threads"] = threads;
  j["out"] = out_dir;
  return j;
}

std::uint64_t ExperimentConfig::hash() const {
  // FNV-1a over the canonical dump; threads and out dir do not affect
  // results and are excluded.
  nlohmann::json j = to_json();
  j.erase("threads");
  j.erase("out");
  const std::string dump = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t ExperimentConfig::effective_trials(int n) const {
  if (!full && n >= 10000) return std::min<std::uint64_t>(trials, 100000);
  return trials;
}

// ---------------------------------------------------------------------------
// table1

std::string table1_csv(const ExperimentConfig& config) {
  std::string body = provenance_line(config);
  body += "distribution,n,mu_f,mu_g,trials,seed,ir_prob,ir_se,efficiency,"
          "gft_mean,gft_se,fb_mean,fb_se\n";
  for (const std::string& family : config.families)
    for (int n : config.n_list)
      for (const auto& [mu_f, mu_g] : config.mu_pairs)
        body += sim_row(family, mu_f, mu_g,
                        forced_trade_cell(config, family, mu_f, mu_g, n));
  return body;
}

int run_table1(const ExperimentConfig& config) {
  if (int rc = prepare_out_dir(config)) return rc;
  try {
    return write_file(config.out_dir + "/table1.csv", table1_csv(config));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
}

// ---------------------------------------------------------------------------
// figures

namespace {

std::string grouped_bar_svg(const ExperimentConfig& config,
                            const std::string& title,
                            const std::vector<std::string>& families,
                            const std::vector<SimReport>& reports) {
  const int width = 640, height = 400;
  const int left = 60, right = 20, top = 50, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  std::string svg = strf(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
      "viewBox=\"0 0 %d %d\">\n",
      width, height, width, height);
  svg += strf("<!-- config_hash=%016llx seed=%llu version=%s -->\n",
              static_cast<unsigned long long>(config.hash()),
              static_cast<unsigned long long>(config.seed), kToolVersion);
  svg += strf("<text x=\"%d\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
              "text-anchor=\"middle\">%s</text>\n",
              width / 2, title.c_str());
  // axes and horizontal gridlines
  for (int g = 0; g <= 5; ++g) {
    const double frac = g / 5.0;
    const double y = top + plot_h * (1.0 - frac);
    svg += strf("<line x1=\"%d\" y1=\"%.1f\" x2=\"%d\" y2=\"%.1f\" "
                "stroke=\"#dddddd\"/>\n",
                left, y, width - right, y);
    svg += strf("<text x=\"%d\" y=\"%.1f\" font-family=\"sans-serif\" "
                "font-size=\"11\" text-anchor=\"end\">%.1f</text>\n",
                left - 6, y + 4, frac);
  }
  const char* colors[2] = {"#4878cf", "#ee854a"};
  const char* labels[2] = {"IR probability", "Efficiency"};
  const std::size_t groups = families.size();
  const double group_w = plot_w / static_cast<double>(groups);
  const double bar_w = group_w / 3.0;
  for (std::size_t gi = 0; gi < groups; ++gi) {
    const double gx = left + group_w * gi;
    const SimReport& r = reports[gi];
    const double vals[2] = {r.ir_prob, r.efficiency_defined ? r.efficiency : 0.0};
    const double ses[2] = {r.ir_se, r.efficiency_defined ? r.gft_se / std::max(r.fb_mean, 1e-300) : 0.0};
    for (int s = 0; s < 2; ++s) {
      const double v = std::min(1.0, std::max(0.0, vals[s]));
      const double x = gx + bar_w * (0.5 + s);
      const double h = plot_h * v;
      svg += strf("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                  "fill=\"%s\"/>\n",
                  x, top + plot_h - h, bar_w * 0.9, h, colors[s]);
      // +-1 standard error
      const double e_lo = top + plot_h * (1.0 - std::min(1.0, v + ses[s]));
      const double e_hi = top + plot_h * (1.0 - std::max(0.0, v - ses[s]));
      const double cx = x + bar_w * 0.45;
      svg += strf("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"#333333\"/>\n",
                  cx, e_lo, cx, e_hi);
    }
    svg += strf("<text x=\"%.1f\" y=\"%d\" font-family=\"sans-serif\" "
                "font-size=\"12\" text-anchor=\"middle\">%s</text>\n",
                gx + group_w / 2.0, height - bottom + 20, families[gi].c_str());
  }
  for (int s = 0; s < 2; ++s)
    svg += strf("<g><rect x=\"%d\" y=\"%d\" width=\"12\" height=\"12\" fill=\"%s\"/>"
                "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\">"
                "%s</text></g>\n",
                left + s * 160, height - 20, colors[s], left + s * 160 + 18,
                height - 10, labels[s]);
  svg += strf("<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%.1f\" stroke=\"#000\"/>\n",
              left, top, left, top + plot_h);
  svg += strf("<line x1=\"%d\" y1=\"%.1f\" x2=\"%d\" y2=\"%.1f\" stroke=\"#000\"/>\n",
              left, top + plot_h, width - right, top + plot_h);
  svg += "</svg>\n";
  return svg;
}

}  // namespace

int run_figures(const ExperimentConfig& config) {
  if (int rc = prepare_out_dir(config)) return rc;
  if (config.n_list.empty()) {
    std::cerr << "warning: empty n_list, nothing to plot\n";
    return 0;
  }
  std::string csv = provenance_line(config);
  csv += "distribution,n,mu_f,mu_g,trials,seed,ir_prob,ir_se,efficiency,"
         "gft_mean,gft_se,fb_mean,fb_se\n";
  try {
    for (int n : config.n_list) {
      for (const auto& [mu_f, mu_g] : config.mu_pairs) {
        std::vector<SimReport> reports;
        for (const std::string& family : config.families) {
          reports.push_back(forced_trade_cell(config, family, mu_f, mu_g, n));
          csv += sim_row(family, mu_f, mu_g, reports.back());
        }
        const std::string title =
            strf("n = %d, (mu_F, mu_G) = (%.2f, %.2f)", n, mu_f, mu_g);
        const std::string path =
            config.out_dir +
            strf("/figure_n%d_mu%02.0f_%02.0f.svg", n, mu_f * 100, mu_g * 100);
        if (int rc = write_file(
                path, grouped_bar_svg(config, title, config.families, reports)))
          return rc;
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return write_file(config.out_dir + "/figures.csv", csv);
}

// ---------------------------------------------------------------------------
// hardness

namespace {

// Near-tight separable witness: a steep ramp through 1/2 split across n
// agents; its GFT approaches 1/8 from below as the ramp sharpens.
std::vector<Component> sharp_step_components(int n, double epsilon) {
  const int nodes = 2000;
  Component c;
  c.values.resize(nodes + 1);
  for (int k = 0; k <= nodes; ++k) {
    const double v = static_cast<double>(k) / nodes;
    const double ramp = std::min(1.0, std::max(0.0, (v - 0.5) / epsilon + 0.5));
    c.values[k] = ramp / n;
  }
  return std::vector<Component>(n, c);
}

}  // namespace

std::string hardness_csv(const ExperimentConfig& config,
                         const std::vector<int>& n_list) {
  std::string body = provenance_line(config);
  body += "n,fb_clt,fb_mc,fb_mc_se,alg_best,tau_star,ratio,randomized_bound\n";
  const Prior values = Prior::uniform(0.5, 0.5);   // U[0,1]
  const Prior costs = Prior::point_mass(0.5);      // G identically 1/2
  for (int n : n_list) {
    if (n % 2 != 0) {
      std::cerr << "warning: skipping odd n = " << n << "\n";
      continue;
    }
    const std::uint64_t trials = std::min<std::uint64_t>(config.trials, 200000);
    const auto [fb_mc, fb_se] =
        estimate_fb(values, costs, n, trials, config.seed, config.threads);
    const HardnessRatio hr = hardness_ratio(n);
    const int comps = std::min(n, 8);
    const RandomizedBound rb =
        randomized_hardness_bound(sharp_step_components(comps, 1e-3));
    body += strf("%d,%.6f,%.6f,%.3e,%.6f,%.4f,%.6f,%.6f\n", n,
                 fb_clt_hardness(static_cast<double>(n)), fb_mc, fb_se, hr.alg,
                 hr.tau_star, hr.ratio, rb.alg);
  }
  return body;
}

int run_hardness(const ExperimentConfig& config, const std::vector<int>& n_list) {
  if (int rc = prepare_out_dir(config)) return rc;
  return write_file(config.out_dir + "/hardness.csv",
                    hardness_csv(config, n_list));
}

// ---------------------------------------------------------------------------
// scaling

std::string scaling_csv(const ExperimentConfig& config) {
  std::string body = provenance_line(config);
  body += "distribution,mu_f,mu_g,n,trials,seed,fb_mean,fb_se,"
          "fb_over_sqrt_n,fb_over_n\n";
  for (const std::string& family : config.families) {
    for (const auto& [mu_f, mu_g] : config.mu_pairs) {
      const Prior values = make_family(family, mu_f, config.sigma, config.radius);
      const Prior costs = make_family(family, mu_g, config.sigma, config.radius);
      for (const ScalingRow& row :
           fb_scaling_probe(values, costs, config.n_list, config.trials,
                            config.seed, config.threads))
        body += strf("%s,%.4f,%.4f,%d,%llu,%llu,%.6e,%.3e,%.6e,%.6e\n",
                     family.c_str(), mu_f, mu_g, row.n,
                     static_cast<unsigned long long>(config.trials),
                     static_cast<unsigned long long>(config.seed), row.fb_mean,
                     row.fb_se, row.fb_over_sqrt_n, row.fb_over_n);
    }
  }
  return body;
}

int run_scaling(const ExperimentConfig& config) {
  if (int rc = prepare_out_dir(config)) return rc;
  return write_file(config.out_dir + "/scaling.csv", scaling_csv(config));
}

// ---------------------------------------------------------------------------
// verification suite

namespace {

// The Myerson increment identity is exact only on grids where tau is a
// node (the payment jump happens at tau, which a coarser grid cannot
// place within a cell). Returns the smallest refinement of K, up to the
// given cap, that contains tau; falls back to K.
int myerson_grid(double tau, int K, int cap = 256) {
  for (int mult = 1; mult * K <= cap; ++mult) {
    const int KM = mult * K;
    const double scaled = tau * KM;
    if (std::abs(scaled - std::round(scaled)) < 1e-9) return KM;
  }
  return K;
}

}  // namespace

VerifySuiteResult run_verify_suite(int n, int K) {
  if (n < 1 || n > 2 || K < 1 || K > 4)
    throw UsageError("run_verify_suite: requires n <= 2 and K <= 4");
  VerifySuiteResult result;
  const std::vector<double> taus = {0.25, 0.5, 0.75};
  const std::vector<MonotoneBoolFn> aggregators = enumerate_monotone_bool(2 * n);
  nlohmann::json failures = nlohmann::json::array();

  for (const MonotoneBoolFn& f : aggregators) {
    for (double tau : taus) {
      const MechanismDef mech = MechanismDef::voting(n, tau, f);
      auto outcome_fn = [&mech](const Profile& p) { return mech.evaluate(p); };
      ++result.mechanisms_checked;

      const RegretReport ic = check_ic(outcome_fn, n, K);
      const BudgetReport budget = check_budget(outcome_fn, n, K);
      const double myerson =
          check_myerson_identity(outcome_fn, n, myerson_grid(tau, K));
      const GridAllocation alloc = GridAllocation::tabulate(mech, n, K);
      const ConformanceResult conf = check_voting_conformance(alloc);
      const bool two_sided = check_two_sided_conformance(alloc);

      if (ic.max_regret > 0.0 || budget.cls != BudgetClass::SBB ||
          myerson > 1e-12 || !conf.conforms || !two_sided) {
        ++result.failures;
        failures.push_back({{"f", f.table_hex()},
                            {"tau", tau},
                            {"ic_regret", ic.max_regret},
                            {"sbb", budget.cls == BudgetClass::SBB},
                            {"myerson_dev", myerson},
                            {"conforms", conf.conforms},
                            {"two_sided", two_sided}});
      }
    }
  }

  // Negative controls: these must be rejected.
  bool two_threshold_rejected = true;
  if (n == 2) {
    // two distinct per-coordinate thresholds; no single tau separates both
    auto alloc = GridAllocation::from_fn(n, K, [](const Profile& p) {
      return p.bids[0] >= 0.25 && p.bids[1] >= 0.75 ? 1.0 : 0.0;
    });
    two_threshold_rejected = !check_voting_conformance(alloc).conforms &&
                             !check_two_sided_conformance(alloc);
  } else {
    // anti-monotone allocation
    auto alloc = GridAllocation::from_fn(n, K, [](const Profile& p) {
      return p.bids[0] < 0.5 ? 1.0 : 0.0;
    });
    two_threshold_rejected = !check_monotone(alloc).monotone;
  }

  const MechanismDef base =
      MechanismDef::voting(n, 0.5, MonotoneBoolFn::threshold(2 * n, n + 1));
  auto perturbed = [&base](const Profile& p) {
    Outcome out = base.evaluate(p);
    out.p += 0.01 * p.bids[0];
    return out;
  };
  const bool perturbed_rejected =
      check_ic(perturbed, n, K).max_regret > 0.0 &&
      check_myerson_identity(perturbed, n, K) > 1e-9;

  result.controls_rejected = two_threshold_rejected && perturbed_rejected;

  result.report = {
      {"n", n},
      {"K", K},
      {"taus", taus},
      {"aggregators", aggregators.size()},
      {"mechanisms_checked", result.mechanisms_checked},
      {"failures", result.failures},
      {"failure_details", failures},
      {"controls",
       {{"two_threshold_rejected", two_threshold_rejected},
        {"perturbed_payment_rejected", perturbed_rejected}}},
      {"pass", result.failures == 0 && result.controls_rejected}};
  return result;
}

int run_verify_suite_cli(const ExperimentConfig& config, int n, int K) {
  if (int rc = prepare_out_dir(config)) return rc;
  VerifySuiteResult result;
  try {
    result = run_verify_suite(n, K);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << result.report.dump(2) << "\n";
  if (int rc = write_file(config.out_dir + "/verify_suite.json",
                          result.report.dump(2) + "\n"))
    return rc;
  return result.failures == 0 && result.controls_rejected ? 0 : 1;
}

int run_verify_file(const ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot read mechanism file " << path << "\n";
    return 2;
  }
  nlohmann::json mech_json;
  try {
    in >> mech_json;
  } catch (const std::exception& e) {
    std::cerr << "error: invalid JSON in " << path << ": " << e.what() << "\n";
    return 2;
  }

  try {
    const MechanismDef mech = MechanismDef::from_json(mech_json);
    const int n = mech.n() > 0 ? mech.n() : 2;
    int K = mech.kind() == MechanismDef::Kind::Grid ? mech.grid_resolution() : 8;
    if (mech.kind() == MechanismDef::Kind::Voting)
      K = myerson_grid(mech.tau(), K);
    auto outcome_fn = [&mech](const Profile& p) { return mech.evaluate(p); };

    nlohmann::json report;
    const RegretReport ic = check_ic(outcome_fn, n, K);
    report["ic_regret"] = ic.max_regret;
    report["ic_sampled"] = ic.sampled;
    const BudgetReport budget = check_budget(outcome_fn, n, K);
    report["budget_class"] = budget.cls == BudgetClass::SBB
                                 ? "SBB"
                                 : budget.cls == BudgetClass::WBB ? "WBB"
                                                                  : "neither";
    report["budget_gap"] = budget.worst_gap;
    report["myerson_dev"] = check_myerson_identity(outcome_fn, n, K);

    if (mech.kind() == MechanismDef::Kind::Separable) {
      auto smooth = [&mech](const std::vector<double>& bids,
                            const std::vector<double>& asks) {
        return mech.evaluate(Profile{bids, asks}).x;
      };
      report["conformance"] = nullptr;
      report["separability"] = check_separability(smooth, n, 1e-3);
    } else {
      const GridAllocation alloc = GridAllocation::tabulate(mech, n, K);
      const ConformanceResult conf = check_voting_conformance(alloc);
      report["conformance"] = conf.conforms;
      if (conf.conforms) report["conformance_tau"] = *conf.tau;
      report["separability"] = nullptr;
    }

    std::cout << report.dump(2) << "\n";
    if (int rc = prepare_out_dir(config)) return rc;
    return write_file(config.out_dir + "/verify_report.json",
                      report.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace mbt

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mbt/mechanism.hpp"
#include "mbt/prior.hpp"

namespace mbt {

// Monte Carlo estimates for one (mechanism, F, G, n) configuration.
// Standard errors are sample standard deviation / sqrt(trials).
struct SimReport {
  double gft_mean = 0.0, gft_se = 0.0;
  double fb_mean = 0.0, fb_se = 0.0;
  double ir_prob = 0.0, ir_se = 0.0;
  double efficiency = 0.0;
  bool efficiency_defined = false;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  int n = 0;
};

// First-best gains from trade: E[(sum v - sum c) 1{sum v >= sum c}].
std::pair<double, double> estimate_fb(const Prior& value_prior,
                                      const Prior& cost_prior, int n,
                                      std::uint64_t trials, std::uint64_t seed,
                                      int threads = 1);

// GFT, IR probability and efficiency of a mechanism under truthful play.
// First best is computed on the same draws (common random numbers), so the
// result is deterministic for a fixed seed regardless of thread count.
SimReport estimate_mechanism(const MechanismDef& mech, const Prior& value_prior,
                             const Prior& cost_prior, int n, std::uint64_t trials,
                             std::uint64_t seed, int threads = 1);

// Leading-order first best for the hardness instance
// (values U[0,1], costs identically 1/2): sqrt(n / 24 pi).
double fb_clt_hardness(double n);

struct HardnessAlg {
  double value;   // (n/2) tau^(n-m+1) (1-tau)^(m+1) C(n, m), m = (1-tau) n
  double series;  // pre-simplification binomial tail sum
};

// Best GFT of a threshold-count voting mechanism at price tau on the
// hardness instance. (1-tau) n must be an integer; the simplified and
// unsimplified forms must agree to 1e-10 relative.
HardnessAlg hardness_alg_forms(int n, double tau);
double hardness_alg_exact(int n, double tau);

struct HardnessRatio {
  double ratio = 0.0;
  double tau_star = 0.0;
  double alg = 0.0;
  double fb = 0.0;
};

// Max over integer-compatible tau of hardness_alg_exact / fb_clt_hardness;
// n must be even so tau = 1/2 is admissible.
HardnessRatio hardness_ratio(int n);

struct RandomizedBound {
  double alg = 0.0;    // sum_i E[(v - 1/2) f_i(v)], v ~ U[0,1]
  double bound = 0.0;  // sum_i (f_i(1) - f_i(0)) / 8, at most 1/8
};

// GFT of a separable randomized allocation on the hardness instance,
// checked against the 1/8 chain. Components must be nondecreasing with the
// aggregate allocation inside [0,1].
RandomizedBound randomized_hardness_bound(const std::vector<Component>& components,
                                          std::size_t integration_points = 20000);

struct ScalingRow {
  int n = 0;
  double fb_mean = 0.0, fb_se = 0.0;
  double fb_over_sqrt_n = 0.0;
  double fb_over_n = 0.0;
};

// First-best growth across n: bounded FB/sqrt(n) when mean(F) <= mean(G),
// FB/n -> mean(F) - mean(G) when mean(F) > mean(G).
std::vector<ScalingRow> fb_scaling_probe(const Prior& value_prior,
                                         const Prior& cost_prior,
                                         const std::vector<int>& n_list,
                                         std::uint64_t trials, std::uint64_t seed,
                                         int threads = 1);

}  // namespace mbt

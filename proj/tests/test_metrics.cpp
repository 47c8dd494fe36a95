#include <doctest.h>

#include <cmath>

#include "mbt/errors.hpp"
#include "mbt/metrics.hpp"

using namespace mbt;

TEST_CASE("point mass FB is exact") {
  // values fixed at 0.6, costs at 0.4: FB = n (0.6 - 0.4) with zero variance
  const auto [mean, se] =
      estimate_fb(Prior::point_mass(0.6), Prior::point_mass(0.4), 10, 1000, 1);
  CHECK(mean == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(se < 1e-6);  // exactly zero up to floating-point cancellation
}

TEST_CASE("estimate_mechanism on point masses is deterministic") {
  const SimReport r = estimate_mechanism(
      MechanismDef::forced(0.6, 0.4), Prior::point_mass(0.6),
      Prior::point_mass(0.4), 5, 1000, 1);
  CHECK(r.ir_prob == 1.0);
  CHECK(r.efficiency_defined);
  CHECK(r.efficiency == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.gft_mean == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("estimates are invariant to thread count") {
  const Prior f = make_family("mixed", 0.55);
  const Prior g = make_family("mixed", 0.45);
  const MechanismDef mech = MechanismDef::forced(f.mean(), g.mean());
  const SimReport one = estimate_mechanism(mech, f, g, 7, 50000, 123, 1);
  const SimReport four = estimate_mechanism(mech, f, g, 7, 50000, 123, 4);
  CHECK(one.gft_mean == four.gft_mean);
  CHECK(one.fb_mean == four.fb_mean);
  CHECK(one.ir_prob == four.ir_prob);
  CHECK(one.gft_se == four.gft_se);
}

TEST_CASE("fb undefined efficiency is flagged") {
  // values always below costs: FB = 0 on every trial
  const SimReport r = estimate_mechanism(
      MechanismDef::forced(0.2, 0.8), Prior::point_mass(0.2),
      Prior::point_mass(0.8), 3, 100, 1);
  CHECK_FALSE(r.efficiency_defined);
}

TEST_CASE("fb CLT constant") {
  CHECK(fb_clt_hardness(1000.0) ==
        doctest::Approx(std::sqrt(1000.0 / (24.0 * 3.14159265358979323846)))
            .epsilon(1e-12));
  CHECK_THROWS_AS(fb_clt_hardness(0.5), UsageError);
}

TEST_CASE("hardness closed form vs 2-d integral oracle at n=2") {
  // ALG(2, 1/2) = E[(v1 + v2 - 1) 1{v1,v2 >= 1/2}] for the tau = 1/2
  // threshold-count mechanism: int_{1/2}^1 int_{1/2}^1 (v1+v2-1) = 1/8
  CHECK(hardness_alg_exact(2, 0.5) == doctest::Approx(0.125).epsilon(1e-9));
  // numeric 2-d midpoint integral as an independent oracle
  const int M = 2000;
  double acc = 0.0;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      const double v1 = (i + 0.5) / M, v2 = (j + 0.5) / M;
      if (v1 >= 0.5 && v2 >= 0.5) acc += v1 + v2 - 1.0;
    }
  acc /= static_cast<double>(M) * M;
  CHECK(hardness_alg_exact(2, 0.5) == doctest::Approx(acc).epsilon(1e-6));
}

TEST_CASE("hardness closed form and series agree at large n") {
  for (int n : {10, 100, 1000, 5000}) {
    const HardnessAlg forms = hardness_alg_forms(n, 0.5);
    CHECK(forms.value == doctest::Approx(forms.series).epsilon(1e-9));
  }
  CHECK_THROWS_AS(hardness_alg_forms(10, 0.55), UsageError);  // (1-tau) n not integer
}

TEST_CASE("hardness Monte Carlo agrees with the closed form") {
  // ALG for tau = 1/2 at n = 10 against simulation of the hardness instance
  const double exact = hardness_alg_exact(10, 0.5);
  const Prior values = Prior::uniform(0.5, 0.5);
  const MonotoneBoolFn f = MonotoneBoolFn::threshold(20, 15);  // s >= (1-tau)n + n
  // simulate directly: sellers always vote 1 at tau=1/2 (cost 1/2 <= tau)
  double acc = 0.0;
  const std::uint64_t trials = 400000;
  for (std::uint64_t t = 0; t < trials; ++t) {
    TrialRng rng(31, t);
    Profile p;
    p.bids.resize(10);
    p.asks.assign(10, 0.5);
    double sum = 0.0;
    for (double& b : p.bids) {
      b = values.sample(rng);
      sum += b;
    }
    acc += voting_allocation(0.5, f, p) * (sum - 5.0);
  }
  acc /= trials;
  CHECK(acc == doctest::Approx(exact).epsilon(0.05));
}

TEST_CASE("hardness ratio approaches sqrt(3)/2 with tau* = 1/2") {
  const HardnessRatio hr = hardness_ratio(1000);
  CHECK(hr.tau_star == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(hr.ratio > 0.82);
  CHECK(hr.ratio < 0.90);
  CHECK(hr.ratio < std::sqrt(3.0) / 2.0 + 0.01);
  CHECK_THROWS_AS(hardness_ratio(999), UsageError);
}

TEST_CASE("randomized bound: linear components give 1/12 vs bound 1/8") {
  // f_i(v) = v/n summed over n components: ALG = n int (v - 1/2) v/n dv = 1/12
  const int n = 4;
  Component lin;
  lin.values = {0.0, 1.0 / n};
  const RandomizedBound rb =
      randomized_hardness_bound(std::vector<Component>(n, lin));
  CHECK(rb.alg == doctest::Approx(1.0 / 12.0).epsilon(1e-6));
  CHECK(rb.bound == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("randomized bound rejects invalid components") {
  Component down;
  down.values = {1.0, 0.0};
  CHECK_THROWS_AS(randomized_hardness_bound({down}), ModelError);
  Component big;
  big.values = {0.0, 2.0};
  CHECK_THROWS_AS(randomized_hardness_bound({big}), ModelError);
}

TEST_CASE("fb scaling: sqrt growth at equal means, linear above") {
  const Prior u = Prior::uniform(0.5, 0.5);
  const auto rows = fb_scaling_probe(u, u, {100, 400}, 100000, 5);
  // FB ~ sqrt(n/24pi): quadrupling n should double FB
  CHECK(rows[1].fb_mean / rows[0].fb_mean == doctest::Approx(2.0).epsilon(0.1));
  CHECK(rows[0].fb_over_sqrt_n ==
        doctest::Approx(1.0 / std::sqrt(24.0 * 3.14159265358979323846))
            .epsilon(0.05));

  const Prior f = Prior::uniform(0.6, 0.4);
  const Prior g = Prior::uniform(0.4, 0.4);
  const auto lin = fb_scaling_probe(f, g, {100, 400}, 100000, 5);
  CHECK(lin[0].fb_over_n == doctest::Approx(0.2).epsilon(0.02));
  CHECK(lin[1].fb_over_n == doctest::Approx(0.2).epsilon(0.02));
}

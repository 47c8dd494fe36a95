#include <doctest.h>

#include <cmath>

#include "mbt/errors.hpp"
#include "mbt/prior.hpp"
#include "mbt/rng.hpp"

using namespace mbt;

namespace {

// Empirical mean and variance over `draws` samples.
std::pair<double, double> sample_stats(const Prior& p, std::size_t draws,
                                       std::uint64_t seed = 7) {
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t t = 0; t < draws; ++t) {
    TrialRng rng(seed, t);
    const double x = p.sample(rng);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / draws;
  const double var = (sum2 - draws * mean * mean) / (draws - 1.0);
  return {mean, var};
}

}  // namespace

TEST_CASE("uniform mean and support") {
  const Prior u = Prior::uniform(0.55, 0.4);
  CHECK(u.mean() == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(u.cdf(0.6) == doctest::Approx(0.5625).epsilon(1e-12));
  CHECK(u.cdf(0.15) == 0.0);
  CHECK(u.cdf(0.95) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t t = 0; t < 10000; ++t) {
    TrialRng rng(3, t);
    const double x = u.sample(rng);
    CHECK(x >= 0.15);
    CHECK(x <= 0.95);
  }
}

TEST_CASE("uniform(0.6, 0.4) midpoint cdf") {
  CHECK(Prior::uniform(0.6, 0.4).cdf(0.6) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bernoulli mean, cdf, and draws") {
  const Prior b = Prior::bernoulli(0.6);
  CHECK(b.mean() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(b.cdf(0.5) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(b.cdf(1.0) == 1.0);
  double sum = 0.0;
  const std::size_t draws = 1000000;
  for (std::size_t t = 0; t < draws; ++t) {
    TrialRng rng(11, t);
    const double x = b.sample(rng);
    CHECK((x == 0.0 || x == 1.0));
    sum += x;
  }
  CHECK(sum / draws == doctest::Approx(0.6).epsilon(0.0025));
}

TEST_CASE("point mass is degenerate") {
  const Prior p = Prior::point_mass(0.5);
  CHECK(p.mean() == 0.5);
  TrialRng rng(1, 0);
  CHECK(p.sample(rng) == 0.5);
  CHECK(p.cdf(0.4999) == 0.0);
  CHECK(p.cdf(0.5) == 1.0);
}

TEST_CASE("truncated normal closed-form mean vs sampling oracle") {
  const Prior tn = Prior::truncated_normal(0.6, 0.2);
  // closed form: mu + sigma (phi(alpha) - phi(beta)) / Z on [0, 1];
  // the upper tail is cut harder, pulling the mean to ~0.58984
  CHECK(tn.mean() == doctest::Approx(0.5898433).epsilon(1e-5));
  CHECK(tn.mean() < 0.6);
  const std::size_t draws = 10000000;
  auto [mean, var] = sample_stats(tn, draws);
  const double se = std::sqrt(var / draws);
  CHECK(std::abs(mean - tn.mean()) < 3.0 * se);
}

TEST_CASE("two-sided truncated normal keeps the mean at mu") {
  const Prior tn = Prior::truncated_normal(0.6, 0.2, 0.2, 1.0);
  CHECK(tn.mean() == doctest::Approx(0.6).epsilon(1e-12));
  for (std::size_t t = 0; t < 20000; ++t) {
    TrialRng rng(5, t);
    const double x = tn.sample(rng);
    CHECK(x >= 0.2);
    CHECK(x <= 1.0);
  }
  // known truncated variance at +-2 sigma: sigma^2 (1 - 2 beta phi(beta)/Z)
  auto [mean, var] = sample_stats(tn, 2000000);
  (void)mean;
  CHECK(var == doctest::Approx(0.030969).epsilon(0.01));
}

TEST_CASE("truncated normal cdf endpoints and monotonicity") {
  const Prior tn = Prior::truncated_normal(0.6, 0.2);
  CHECK(tn.cdf(1.0) == 1.0);
  CHECK(tn.cdf(0.0) == 0.0);
  double prev = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double c = tn.cdf(k / 100.0);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("mixture mean is the weighted average") {
  const double w = 1.0 / 3.0;
  const Prior m = Prior::mixture(
      {w, w, 1.0 - 2.0 * w},
      {Prior::truncated_normal(0.6, 0.2, 0.2, 1.0), Prior::uniform(0.6, 0.4),
       Prior::bernoulli(0.6)});
  const double expect =
      (Prior::truncated_normal(0.6, 0.2, 0.2, 1.0).mean() + 0.6 + 0.6) / 3.0;
  CHECK(m.mean() == doctest::Approx(expect).epsilon(1e-9));
  CHECK(m.cdf(1.0) == 1.0);
}

TEST_CASE("make_family ids and mixed composition") {
  CHECK(make_family("normal", 0.6).mean() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(make_family("uniform", 0.4).mean() == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(make_family("bernoulli", 0.49).mean() == doctest::Approx(0.49).epsilon(1e-12));
  CHECK(make_family("point", 0.5).mean() == 0.5);
  CHECK(make_family("mixed", 0.55).mean() == doctest::Approx(0.55).epsilon(1e-9));
  CHECK_THROWS_AS(make_family("cauchy", 0.5), ConfigError);
}

TEST_CASE("all families stay inside [0,1]") {
  for (const char* fam : {"normal", "uniform", "bernoulli", "mixed", "point"}) {
    const Prior p = make_family(fam, 0.51);
    for (std::size_t t = 0; t < 20000; ++t) {
      TrialRng rng(17, t);
      const double x = p.sample(rng);
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
}

TEST_CASE("empirical mean matches mean() within 4 sigma for every family") {
  const std::size_t draws = 1000000;
  for (const char* fam : {"normal", "uniform", "bernoulli", "mixed"}) {
    const Prior p = make_family(fam, 0.55);
    auto [mean, var] = sample_stats(p, draws, 23);
    CHECK(std::abs(mean - p.mean()) < 4.0 * std::sqrt(var) / 1000.0);
  }
}

TEST_CASE("invalid parameters are construction-time errors") {
  CHECK_THROWS_AS(Prior::uniform(0.9, 0.2), ConfigError);
  CHECK_THROWS_AS(Prior::bernoulli(1.5), ConfigError);
  CHECK_THROWS_AS(Prior::point_mass(-0.1), ConfigError);
  CHECK_THROWS_AS(Prior::truncated_normal(0.5, 0.0), ConfigError);
  CHECK_THROWS_AS(Prior::truncated_normal(0.5, 0.2, 0.8, 0.2), ConfigError);
  // acceptance probability far below 1e-6
  CHECK_THROWS_AS(Prior::truncated_normal(100.0, 0.1), ConfigError);
  CHECK_THROWS_AS(Prior::mixture({0.5, 0.6},
                                 {Prior::bernoulli(0.5), Prior::bernoulli(0.5)}),
                  ConfigError);
  CHECK_THROWS_AS(Prior::mixture({}, {}), ConfigError);
}

TEST_CASE("sampling is reproducible per (seed, trial)") {
  const Prior p = make_family("mixed", 0.6);
  TrialRng a(42, 9), b(42, 9), c(42, 10);
  CHECK(p.sample(a) == p.sample(b));
  TrialRng a2(42, 9);
  p.sample(a2);
  CHECK(p.sample(a2) != p.sample(c));  // streams advance independently
}

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mbt/rng.hpp"

namespace mbt {

struct PriorRep;

// A bounded value/cost distribution on [0, 1] with exact mean, CDF and
// reproducible sampling. Immutable after construction; cheap to copy and
// safe to share across threads.
class Prior {
 public:
  // Normal(mu, sigma^2) conditioned on [lo, hi] (re-normalized, not
  // clipped); [lo, hi] must sit inside [0, 1]. Rejects parameters whose
  // acceptance probability falls below 1e-6.
  static Prior truncated_normal(double mu, double sigma, double lo = 0.0,
                                double hi = 1.0);

  // Uniform on [mu - radius, mu + radius]; the support must stay in [0, 1].
  static Prior uniform(double mu, double radius);

  static Prior bernoulli(double mu);

  static Prior point_mass(double value);

  // Positive weights summing to 1 within 1e-12.
  static Prior mixture(std::vector<double> weights, std::vector<Prior> components);

  // Exact (closed-form) expectation of the distribution as sampled.
  double mean() const;

  // P(draw <= t) for t in [0, 1].
  double cdf(double t) const;

  double sample(TrialRng& rng) const;

 private:
  explicit Prior(std::shared_ptr<const PriorRep> rep) : rep_(std::move(rep)) {}
  std::shared_ptr<const PriorRep> rep_;
};

// The four distribution families used in the experiments, keyed by the
// config-file family id: "normal", "uniform", "bernoulli", "mixed", "point".
Prior make_family(const std::string& family, double mu, double sigma = 0.2,
                  double radius = 0.4);

}  // namespace mbt

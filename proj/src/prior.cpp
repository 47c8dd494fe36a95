#include "mbt/prior.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <variant>

#include "mbt/errors.hpp"

namespace mbt {

namespace {

constexpr double kMinAcceptance = 1e-6;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

}  // namespace

struct PriorRep {
  struct TruncNormal {
    double mu, sigma;
    double lo, hi;       // truncation window inside [0, 1]
    double alpha, beta;  // standardized window endpoints
    double z;            // Phi(beta) - Phi(alpha), acceptance probability
    double mean;
  };
  struct Uniform {
    double lo, hi;
  };
  struct Bernoulli {
    double mu;
  };
  struct PointMass {
    double value;
  };
  struct Mixture {
    std::vector<double> weights;
    std::vector<Prior> components;
    double mean;
  };
  std::variant<TruncNormal, Uniform, Bernoulli, PointMass, Mixture> v;
};

Prior Prior::truncated_normal(double mu, double sigma, double lo, double hi) {
  if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(sigma))
    throw ConfigError("truncated_normal: sigma must be positive and finite");
  if (!(lo < hi) || lo < 0.0 || hi > 1.0)
    throw ConfigError("truncated_normal: need 0 <= lo < hi <= 1");
  PriorRep::TruncNormal t;
  t.mu = mu;
  t.sigma = sigma;
  t.lo = lo;
  t.hi = hi;
  t.alpha = (lo - mu) / sigma;
  t.beta = (hi - mu) / sigma;
  t.z = normal_cdf(t.beta) - normal_cdf(t.alpha);
  if (t.z < kMinAcceptance)
    throw ConfigError("truncated_normal: acceptance probability below 1e-6");
  t.mean = mu + sigma * (normal_pdf(t.alpha) - normal_pdf(t.beta)) / t.z;
  return Prior(std::make_shared<const PriorRep>(PriorRep{t}));
}

Prior Prior::uniform(double mu, double radius) {
  if (radius < 0.0) throw ConfigError("uniform: radius must be non-negative");
  const double lo = mu - radius, hi = mu + radius;
  if (lo < -1e-12 || hi > 1.0 + 1e-12)
    throw ConfigError("uniform: support must be contained in [0,1]");
  return Prior(std::make_shared<const PriorRep>(
      PriorRep{PriorRep::Uniform{std::max(lo, 0.0), std::min(hi, 1.0)}}));
}

Prior Prior::bernoulli(double mu) {
  if (mu < 0.0 || mu > 1.0) throw ConfigError("bernoulli: mu must be in [0,1]");
  return Prior(std::make_shared<const PriorRep>(PriorRep{PriorRep::Bernoulli{mu}}));
}

Prior Prior::point_mass(double value) {
  if (value < 0.0 || value > 1.0)
    throw ConfigError("point_mass: value must be in [0,1]");
  return Prior(std::make_shared<const PriorRep>(PriorRep{PriorRep::PointMass{value}}));
}

Prior Prior::mixture(std::vector<double> weights, std::vector<Prior> components) {
  if (weights.empty() || weights.size() != components.size())
    throw ConfigError("mixture: need matching non-empty weights and components");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("mixture: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ConfigError("mixture: weights must sum to 1 within 1e-12");
  double mean = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    mean += weights[i] * components[i].mean();
  return Prior(std::make_shared<const PriorRep>(
      PriorRep{PriorRep::Mixture{std::move(weights), std::move(components), mean}}));
}

double Prior::mean() const {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PriorRep::TruncNormal>) return d.mean;
        else if constexpr (std::is_same_v<T, PriorRep::Uniform>)
          return 0.5 * (d.lo + d.hi);
        else if constexpr (std::is_same_v<T, PriorRep::Bernoulli>) return d.mu;
        else if constexpr (std::is_same_v<T, PriorRep::PointMass>) return d.value;
        else return d.mean;
      },
      rep_->v);
}

double Prior::cdf(double t) const {
  return std::visit(
      [t](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PriorRep::TruncNormal>) {
          if (t <= d.lo) return 0.0;
          if (t >= d.hi) return 1.0;
          const double z = (t - d.mu) / d.sigma;
          return (normal_cdf(z) - normal_cdf(d.alpha)) / d.z;
        } else if constexpr (std::is_same_v<T, PriorRep::Uniform>) {
          if (d.hi <= d.lo) return t >= d.lo ? 1.0 : 0.0;
          const double u = (t - d.lo) / (d.hi - d.lo);
          return std::min(1.0, std::max(0.0, u));
        } else if constexpr (std::is_same_v<T, PriorRep::Bernoulli>) {
          if (t < 0.0) return 0.0;
          return t >= 1.0 ? 1.0 : 1.0 - d.mu;
        } else if constexpr (std::is_same_v<T, PriorRep::PointMass>) {
          return t >= d.value ? 1.0 : 0.0;
        } else {
          double acc = 0.0;
          for (std::size_t i = 0; i < d.weights.size(); ++i)
            acc += d.weights[i] * d.components[i].cdf(t);
          return acc;
        }
      },
      rep_->v);
}

double Prior::sample(TrialRng& rng) const {
  return std::visit(
      [&rng](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PriorRep::TruncNormal>) {
          // Rejection against the unconditioned normal; the construction-time
          // guard bounds the expected number of iterations.
          for (long attempt = 0; attempt < 100000000L; ++attempt) {
            const double x = d.mu + d.sigma * rng.next_normal();
            if (x >= d.lo && x <= d.hi) return x;
          }
          throw ModelError("truncated_normal: rejection sampling did not terminate");
        } else if constexpr (std::is_same_v<T, PriorRep::Uniform>) {
          return d.lo + (d.hi - d.lo) * rng.next_unit();
        } else if constexpr (std::is_same_v<T, PriorRep::Bernoulli>) {
          return rng.next_unit() < d.mu ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, PriorRep::PointMass>) {
          return d.value;
        } else {
          double u = rng.next_unit();
          for (std::size_t i = 0; i + 1 < d.weights.size(); ++i) {
            if (u < d.weights[i]) return d.components[i].sample(rng);
            u -= d.weights[i];
          }
          return d.components.back().sample(rng);
        }
      },
      rep_->v);
}

namespace {

// The experiment families truncate the normal to the two-sigma window
// around its mean (clamped to [0, 1]); the symmetric window keeps the mean
// at exactly mu, which the forced-trade price depends on.
Prior family_normal(double mu, double sigma) {
  return Prior::truncated_normal(mu, sigma, std::max(0.0, mu - 2.0 * sigma),
                                 std::min(1.0, mu + 2.0 * sigma));
}

}  // namespace

Prior make_family(const std::string& family, double mu, double sigma, double radius) {
  if (family == "normal") return family_normal(mu, sigma);
  if (family == "uniform") return Prior::uniform(mu, radius);
  if (family == "bernoulli") return Prior::bernoulli(mu);
  if (family == "point") return Prior::point_mass(mu);
  if (family == "mixed") {
    const double w = 1.0 / 3.0;
    return Prior::mixture({w, w, 1.0 - 2.0 * w},
                          {family_normal(mu, sigma),
                           Prior::uniform(mu, radius), Prior::bernoulli(mu)});
  }
  throw ConfigError("unknown distribution family: " + family);
}

}  // namespace mbt

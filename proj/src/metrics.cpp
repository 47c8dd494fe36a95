#include "mbt/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "mbt/errors.hpp"
#include "mbt/rng.hpp"

namespace mbt {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::uint64_t kBatchSize = 16384;

struct BatchSums {
  double gft = 0.0, gft2 = 0.0;
  double fb = 0.0, fb2 = 0.0;
  std::uint64_t ir = 0;
};

// Trials are split into fixed-size batches keyed by trial index; workers
// pick batches dynamically but partial sums merge in batch order, so the
// accumulated totals do not depend on the number of threads.
SimReport run_trials(const MechanismDef* mech, const Prior& value_prior,
                     const Prior& cost_prior, int n, std::uint64_t trials,
                     std::uint64_t seed, int threads) {
  if (trials < 1) throw ConfigError("run_trials: trials must be >= 1");
  if (n < 1) throw ConfigError("run_trials: n must be >= 1");
  const std::uint64_t batches = (trials + kBatchSize - 1) / kBatchSize;
  std::vector<BatchSums> partial(batches);

  auto run_batch = [&](std::uint64_t b) {
    BatchSums sums;
    Profile profile;
    profile.bids.resize(n);
    profile.asks.resize(n);
    const std::uint64_t lo = b * kBatchSize;
    const std::uint64_t hi = std::min(trials, lo + kBatchSize);
    for (std::uint64_t t = lo; t < hi; ++t) {
      TrialRng rng(seed, t);
      double sum_v = 0.0, sum_c = 0.0;
      for (int i = 0; i < n; ++i) {
        profile.bids[i] = value_prior.sample(rng);
        sum_v += profile.bids[i];
      }
      for (int j = 0; j < n; ++j) {
        profile.asks[j] = cost_prior.sample(rng);
        sum_c += profile.asks[j];
      }
      const double fb = sum_v >= sum_c ? sum_v - sum_c : 0.0;
      sums.fb += fb;
      sums.fb2 += fb * fb;
      if (mech) {
        const Outcome out = mech->evaluate(profile);
        const double gft = (sum_v - sum_c) * out.x;
        sums.gft += gft;
        sums.gft2 += gft * gft;
        const double buyer_total = out.x * sum_v - n * out.p;
        const double seller_total = n * out.r - out.x * sum_c;
        if (buyer_total >= 0.0 && seller_total >= 0.0) ++sums.ir;
      }
    }
    partial[b] = sums;
  };

  if (threads <= 1) {
    for (std::uint64_t b = 0; b < batches; ++b) run_batch(b);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::uint64_t b = next.fetch_add(1); b < batches;
             b = next.fetch_add(1))
          run_batch(b);
      });
    for (auto& th : pool) th.join();
  }

  BatchSums total;
  for (const BatchSums& s : partial) {
    total.gft += s.gft;
    total.gft2 += s.gft2;
    total.fb += s.fb;
    total.fb2 += s.fb2;
    total.ir += s.ir;
  }

  const double t = static_cast<double>(trials);
  auto se_of = [t](double sum, double sum2) {
    if (t < 2) return 0.0;
    const double mean = sum / t;
    const double var = std::max(0.0, (sum2 - t * mean * mean) / (t - 1.0));
    return std::sqrt(var / t);
  };

  SimReport report;
  report.trials = trials;
  report.seed = seed;
  report.n = n;
  report.fb_mean = total.fb / t;
  report.fb_se = se_of(total.fb, total.fb2);
  report.gft_mean = total.gft / t;
  report.gft_se = se_of(total.gft, total.gft2);
  const double ir = static_cast<double>(total.ir);
  report.ir_prob = ir / t;
  report.ir_se = se_of(ir, ir);  // indicator: sum of squares equals sum
  if (report.fb_mean > 0.0) {
    report.efficiency = report.gft_mean / report.fb_mean;
    report.efficiency_defined = true;
  }
  return report;
}

double log_choose(int n, int m) {
  return std::lgamma(n + 1.0) - std::lgamma(m + 1.0) - std::lgamma(n - m + 1.0);
}

double choose_exact(int n, int m) {
  double c = 1.0;
  for (int i = 1; i <= m; ++i) c = c * (n - m + i) / i;
  return c;
}

}  // namespace

std::pair<double, double> estimate_fb(const Prior& value_prior,
                                      const Prior& cost_prior, int n,
                                      std::uint64_t trials, std::uint64_t seed,
                                      int threads) {
  const SimReport r =
      run_trials(nullptr, value_prior, cost_prior, n, trials, seed, threads);
  return {r.fb_mean, r.fb_se};
}

SimReport estimate_mechanism(const MechanismDef& mech, const Prior& value_prior,
                             const Prior& cost_prior, int n, std::uint64_t trials,
                             std::uint64_t seed, int threads) {
  return run_trials(&mech, value_prior, cost_prior, n, trials, seed, threads);
}

double fb_clt_hardness(double n) {
  if (n < 1.0) throw UsageError("fb_clt_hardness: n must be >= 1");
  return std::sqrt(n / (24.0 * kPi));
}

HardnessAlg hardness_alg_forms(int n, double tau) {
  if (n < 1) throw UsageError("hardness_alg_exact: n must be >= 1");
  const double m_real = (1.0 - tau) * n;
  const long m = std::lround(m_real);
  if (std::abs(m_real - static_cast<double>(m)) > 1e-9)
    throw UsageError("hardness_alg_exact: (1 - tau) n must be an integer");
  if (m == 0 || tau == 0.0) return {0.0, 0.0};  // (1-tau)^(m+1) or tau^... vanishes

  HardnessAlg out;
  const int mi = static_cast<int>(m);
  if (n <= 60) {
    out.value = 0.5 * n * std::pow(tau, n - mi + 1) * std::pow(1.0 - tau, mi + 1) *
                choose_exact(n, mi);
  } else {
    out.value = std::exp(std::log(0.5 * n) + (n - mi + 1) * std::log(tau) +
                         (mi + 1) * std::log(1.0 - tau) + log_choose(n, mi));
  }

  double sum = 0.0;
  for (int i = mi; i <= n; ++i) {
    const double log_term =
        log_choose(n, i) + (n - i) * std::log(tau) + i * std::log(1.0 - tau);
    sum += std::exp(log_term) * 0.5 * (i - m_real);
  }
  out.series = sum;

  const double scale = std::max(std::abs(out.value), std::abs(out.series));
  if (scale > 0.0 && std::abs(out.value - out.series) > 1e-10 * scale)
    throw ModelError("hardness_alg_exact: closed form and series disagree");
  return out;
}

double hardness_alg_exact(int n, double tau) {
  return hardness_alg_forms(n, tau).value;
}

HardnessRatio hardness_ratio(int n) {
  if (n < 2 || n % 2 != 0) throw UsageError("hardness_ratio: n must be even");
  HardnessRatio best;
  best.fb = fb_clt_hardness(static_cast<double>(n));
  for (int m = 1; m < n; ++m) {
    const double tau = 1.0 - static_cast<double>(m) / n;
    const double alg = hardness_alg_exact(n, tau);
    const double ratio = alg / best.fb;
    if (ratio > best.ratio) {
      best.ratio = ratio;
      best.tau_star = tau;
      best.alg = alg;
    }
  }
  return best;
}

RandomizedBound randomized_hardness_bound(const std::vector<Component>& components,
                                          std::size_t integration_points) {
  if (integration_points < 10000)
    throw UsageError("randomized_hardness_bound: need >= 1e4 integration points");
  double lo = 0.0, hi = 0.0;
  for (const auto& f : components) {
    if (f.values.size() < 2 || !f.nondecreasing())
      throw ModelError("randomized_hardness_bound: component must be nondecreasing");
    lo += f.value_at_0();
    hi += f.value_at_1();
  }
  if (lo < -1e-9 || hi > 1.0 + 1e-9)
    throw ModelError("randomized_hardness_bound: aggregate allocation leaves [0,1]");

  RandomizedBound out;
  const double w = 1.0 / static_cast<double>(integration_points);
  for (const auto& f : components) {
    double integral = 0.0;
    for (std::size_t k = 0; k < integration_points; ++k) {
      const double v = (static_cast<double>(k) + 0.5) * w;
      integral += (v - 0.5) * f(v);
    }
    out.alg += integral * w;
    out.bound += (f.value_at_1() - f.value_at_0()) / 8.0;
  }
  if (out.alg > out.bound + 1e-6 || out.bound > 0.125 + 1e-6)
    throw ModelError("randomized_hardness_bound: 1/8 chain violated");
  return out;
}

std::vector<ScalingRow> fb_scaling_probe(const Prior& value_prior,
                                         const Prior& cost_prior,
                                         const std::vector<int>& n_list,
                                         std::uint64_t trials, std::uint64_t seed,
                                         int threads) {
  std::vector<ScalingRow> rows;
  for (int n : n_list) {
    ScalingRow row;
    row.n = n;
    std::tie(row.fb_mean, row.fb_se) =
        estimate_fb(value_prior, cost_prior, n, trials, seed, threads);
    row.fb_over_sqrt_n = row.fb_mean / std::sqrt(static_cast<double>(n));
    row.fb_over_n = row.fb_mean / static_cast<double>(n);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mbt

#include "mbt/verify.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "mbt/errors.hpp"
#include "mbt/rng.hpp"

namespace mbt {

namespace {

constexpr std::uint64_t kExhaustiveCap = 1000000;   // profiles
constexpr std::uint64_t kSampleCount = 100000;

}  // namespace

GridAllocation GridAllocation::from_fn(int n, int K, GridAllocFn fn) {
  if (n < 1 || K < 1) throw UsageError("GridAllocation: need n >= 1 and K >= 1");
  return GridAllocation{n, K, std::move(fn)};
}

GridAllocation GridAllocation::tabulate(const MechanismDef& mech, int n, int K) {
  const std::uint64_t count = grid_profile_count(n, K);
  if (count > kExhaustiveCap)
    throw UsageError("GridAllocation::tabulate: grid too large");
  auto table = std::make_shared<std::vector<double>>(count);
  for (std::uint64_t idx = 0; idx < count; ++idx)
    (*table)[idx] = mech.evaluate(grid_profile(idx, n, K)).x;
  return GridAllocation{
      n, K, [table, K](const Profile& p) { return (*table)[grid_index(p, K)]; }};
}

MonotoneReport check_monotone(const GridAllocation& x) {
  const std::uint64_t count = x.profile_count();
  const int n = x.n, K = x.K;
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    Profile p = grid_profile(idx, n, K);
    const double base = x.eval(p);
    for (int i = 0; i < n; ++i) {
      if (p.bids[i] >= 1.0) continue;
      Profile q = p;
      q.bids[i] += 1.0 / K;
      if (x.eval(q) < base - 1e-12) return {false, p, q};
    }
    for (int j = 0; j < n; ++j) {
      if (p.asks[j] >= 1.0) continue;
      Profile q = p;
      q.asks[j] += 1.0 / K;
      if (x.eval(q) > base + 1e-12) return {false, p, q};
    }
  }
  return {};
}

RegretReport check_ic(const GridOutcomeFn& mech, int n, int K, std::uint64_t seed,
                      double tol) {
  RegretReport report;
  const std::uint64_t count = grid_profile_count(n, K);
  report.sampled = count > kExhaustiveCap;
  const std::uint64_t todo = report.sampled ? kSampleCount : count;

  TrialRng rng(seed, 0);
  for (std::uint64_t t = 0; t < todo; ++t) {
    const std::uint64_t idx =
        report.sampled ? rng.next_u64() % count : t;
    Profile profile = grid_profile(idx, n, K);
    const Outcome truth = mech(profile);
    for (int i = 0; i < n; ++i) {
      const double v = profile.bids[i];
      const double u_truth = truth.x * v - truth.p;
      const double saved = profile.bids[i];
      for (int d = 0; d <= K; ++d) {
        profile.bids[i] = static_cast<double>(d) / K;
        const Outcome dev = mech(profile);
        const double shortfall = (dev.x * v - dev.p) - u_truth;
        if (shortfall > tol) {
          ++report.violations;
          if (shortfall > report.max_regret) {
            report.max_regret = shortfall;
            report.buyer_side = true;
            report.agent = i;
            report.true_type = v;
            report.deviation = profile.bids[i];
            profile.bids[i] = saved;
            report.worst_profile = profile;
            profile.bids[i] = static_cast<double>(d) / K;
          }
        }
      }
      profile.bids[i] = saved;
    }
    for (int j = 0; j < n; ++j) {
      const double c = profile.asks[j];
      const double u_truth = truth.r - truth.x * c;
      const double saved = profile.asks[j];
      for (int d = 0; d <= K; ++d) {
        profile.asks[j] = static_cast<double>(d) / K;
        const Outcome dev = mech(profile);
        const double shortfall = (dev.r - dev.x * c) - u_truth;
        if (shortfall > tol) {
          ++report.violations;
          if (shortfall > report.max_regret) {
            report.max_regret = shortfall;
            report.buyer_side = false;
            report.agent = j;
            report.true_type = c;
            report.deviation = profile.asks[j];
            profile.asks[j] = saved;
            report.worst_profile = profile;
            profile.asks[j] = static_cast<double>(d) / K;
          }
        }
      }
      profile.asks[j] = saved;
    }
  }
  report.profiles_checked = todo;
  return report;
}

double check_myerson_identity(const GridOutcomeFn& mech, int n, int K) {
  const std::uint64_t count = grid_profile_count(n, K);
  const bool sampled = count > kExhaustiveCap;
  const std::uint64_t todo = sampled ? kSampleCount : count;
  const double step = 1.0 / K;
  double max_dev = 0.0;

  TrialRng rng(2, 0);
  for (std::uint64_t t = 0; t < todo; ++t) {
    const std::uint64_t idx = sampled ? rng.next_u64() % count : t;
    Profile p = grid_profile(idx, n, K);
    const Outcome base = mech(p);
    // Buyer lines: p(beta) - p(alpha) = beta x(beta) - alpha x(alpha) - int x.
    // The cell integral takes the left node for bid coordinates and the
    // right node for ask coordinates; exact when jumps sit on grid nodes
    // with ties broken toward trade.
    for (int i = 0; i < n; ++i) {
      if (p.bids[i] >= 1.0) continue;
      Profile q = p;
      q.bids[i] += step;
      const Outcome up = mech(q);
      const double lhs = up.p - base.p;
      const double rhs =
          q.bids[i] * up.x - p.bids[i] * base.x - step * base.x;
      max_dev = std::max(max_dev, std::abs(lhs - rhs));
    }
    for (int j = 0; j < n; ++j) {
      if (p.asks[j] >= 1.0) continue;
      Profile q = p;
      q.asks[j] += step;
      const Outcome up = mech(q);
      const double lhs = up.r - base.r;
      const double rhs =
          q.asks[j] * up.x - p.asks[j] * base.x - step * up.x;
      max_dev = std::max(max_dev, std::abs(lhs - rhs));
    }
  }
  return max_dev;
}

BudgetReport check_budget(const GridOutcomeFn& mech, int n, int K) {
  const std::uint64_t count = grid_profile_count(n, K);
  const bool sampled = count > kExhaustiveCap;
  const std::uint64_t todo = sampled ? kSampleCount : count;
  BudgetReport report;
  report.worst_gap = -1e300;
  TrialRng rng(3, 0);
  for (std::uint64_t t = 0; t < todo; ++t) {
    const std::uint64_t idx = sampled ? rng.next_u64() % count : t;
    const Outcome out = mech(grid_profile(idx, n, K));
    report.worst_gap = std::max(report.worst_gap, out.r - out.p);
    report.max_abs_diff = std::max(report.max_abs_diff, std::abs(out.p - out.r));
  }
  if (report.max_abs_diff <= 1e-12) report.cls = BudgetClass::SBB;
  else if (report.worst_gap <= 1e-12) report.cls = BudgetClass::WBB;
  else report.cls = BudgetClass::Neither;
  return report;
}

// ---------------------------------------------------------------------------
// Voting conformance

namespace {

struct ClassTable {
  // pattern -> {value, representative profile index}; -1 means unrealized
  std::vector<int> value;
  std::vector<std::uint64_t> rep;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> conflict;
};

// Groups grid profiles by their 2n-bit trade-vote pattern at tau and
// requires x constant on each class.
ClassTable classify(const GridAllocation& x, double tau) {
  const std::uint64_t count = x.profile_count();
  const std::size_t patterns = std::size_t{1} << (2 * x.n);
  ClassTable ct;
  ct.value.assign(patterns, -1);
  ct.rep.assign(patterns, 0);
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    const Profile p = grid_profile(idx, x.n, x.K);
    const double raw = x.eval(p);
    if (raw != 0.0 && raw != 1.0)
      throw UsageError("check_voting_conformance: allocation is not deterministic");
    const int v = static_cast<int>(raw);
    const std::uint32_t bits = trade_votes(tau, p);
    if (ct.value[bits] == -1) {
      ct.value[bits] = v;
      ct.rep[bits] = idx;
    } else if (ct.value[bits] != v) {
      ct.conflict = {ct.rep[bits], idx};
      return ct;
    }
  }
  return ct;
}

// Monotone completion exists iff no realized pattern pair a subset-of b has
// value(a) = 1, value(b) = 0.
bool monotone_consistent(const ClassTable& ct) {
  const std::size_t patterns = ct.value.size();
  for (std::size_t a = 0; a < patterns; ++a) {
    if (ct.value[a] != 1) continue;
    for (std::size_t b = a; b < patterns; ++b) {
      if (ct.value[b] != 0) continue;
      if ((a & ~b) == 0) return false;
    }
  }
  return true;
}

MonotoneBoolFn complete_table(int arity, const ClassTable& ct) {
  const std::size_t patterns = std::size_t{1} << arity;
  std::vector<std::uint8_t> table(patterns, 0);
  // upward closure of realized ones; matches realized values when
  // monotone_consistent holds
  for (std::size_t u = 0; u < patterns; ++u) {
    if (ct.value[u] == 1) {
      table[u] = 1;
      continue;
    }
    for (std::size_t a = 0; a < patterns && !table[u]; ++a)
      if (ct.value[a] == 1 && (a & ~u) == 0) table[u] = 1;
  }
  return MonotoneBoolFn::from_table(arity, std::move(table));
}

std::vector<double> tau_candidates(int K) {
  // Indicator patterns only change at grid values or between them, so grid
  // nodes plus cell midpoints cover every distinct joint behavior,
  // including ties at the nodes.
  std::vector<double> taus;
  for (int k = 0; k <= K; ++k) taus.push_back(static_cast<double>(k) / K);
  for (int k = 0; k < K; ++k) taus.push_back((k + 0.5) / K);
  std::sort(taus.begin(), taus.end());
  return taus;
}

}  // namespace

ConformanceResult check_voting_conformance(const GridAllocation& x) {
  if (2 * x.n > 12)
    throw UsageError("check_voting_conformance: grid too large for class search");
  ConformanceResult result;
  for (double tau : tau_candidates(x.K)) {
    ClassTable ct = classify(x, tau);
    if (ct.conflict) {
      if (!result.witness)
        result.witness = {grid_profile(ct.conflict->first, x.n, x.K),
                          grid_profile(ct.conflict->second, x.n, x.K)};
      continue;
    }
    if (!monotone_consistent(ct)) continue;
    result.conforms = true;
    result.tau = tau;
    result.f = complete_table(2 * x.n, ct);
    result.witness.reset();
    return result;
  }
  return result;
}

namespace {

// One-sided conformance over a single side's coordinates. `bit_of` maps a
// coordinate and threshold to the pro-trade indicator; x must be a
// monotone Boolean function of those indicators for some threshold.
bool one_sided_conforms(int n, int K,
                        const std::function<double(const std::vector<double>&)>& eval,
                        bool buyer_side) {
  std::uint64_t count = 1;
  for (int i = 0; i < n; ++i) count *= static_cast<std::uint64_t>(K + 1);
  auto coords_of = [n, K](std::uint64_t idx) {
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i) {
      c[i] = static_cast<double>(idx % (K + 1)) / K;
      idx /= K + 1;
    }
    return c;
  };

  for (double tau : tau_candidates(K)) {
    const std::size_t patterns = std::size_t{1} << n;
    std::vector<int> value(patterns, -1);
    bool ok = true;
    for (std::uint64_t idx = 0; idx < count && ok; ++idx) {
      const std::vector<double> c = coords_of(idx);
      const double raw = eval(c);
      if (raw != 0.0 && raw != 1.0)
        throw UsageError("check_two_sided_conformance: allocation not deterministic");
      std::uint32_t bits = 0;
      for (int i = 0; i < n; ++i) {
        const bool pro = buyer_side ? c[i] >= tau : c[i] <= tau;
        if (pro) bits |= 1u << i;
      }
      const int v = static_cast<int>(raw);
      if (value[bits] == -1) value[bits] = v;
      else if (value[bits] != v) ok = false;
    }
    if (!ok) continue;
    bool mono = true;
    for (std::size_t a = 0; a < patterns && mono; ++a) {
      if (value[a] != 1) continue;
      for (std::size_t b = 0; b < patterns; ++b)
        if (value[b] == 0 && (a & ~b) == 0) { mono = false; break; }
    }
    if (mono) return true;
  }
  return false;
}

}  // namespace

bool check_two_sided_conformance(const GridAllocation& x) {
  const int n = x.n, K = x.K;
  std::uint64_t side_count = 1;
  for (int i = 0; i < n; ++i) side_count *= static_cast<std::uint64_t>(K + 1);

  // condition (a): fixed asks, threshold over buyer bits
  for (std::uint64_t aidx = 0; aidx < side_count; ++aidx) {
    std::vector<double> asks(n);
    std::uint64_t rem = aidx;
    for (int j = 0; j < n; ++j) {
      asks[j] = static_cast<double>(rem % (K + 1)) / K;
      rem /= K + 1;
    }
    auto eval = [&x, &asks](const std::vector<double>& bids) {
      return x.eval(Profile{bids, asks});
    };
    if (!one_sided_conforms(n, K, eval, /*buyer_side=*/true)) return false;
  }
  // condition (b): fixed bids, threshold over seller bits
  for (std::uint64_t bidx = 0; bidx < side_count; ++bidx) {
    std::vector<double> bids(n);
    std::uint64_t rem = bidx;
    for (int i = 0; i < n; ++i) {
      bids[i] = static_cast<double>(rem % (K + 1)) / K;
      rem /= K + 1;
    }
    auto eval = [&x, &bids](const std::vector<double>& asks) {
      return x.eval(Profile{bids, asks});
    };
    if (!one_sided_conforms(n, K, eval, /*buyer_side=*/false)) return false;
  }
  return true;
}

double check_separability(const SmoothAllocFn& x, int n, double h,
                          std::uint64_t seed, std::size_t points) {
  double max_mixed = 0.0;
  for (std::size_t t = 0; t < points; ++t) {
    TrialRng rng(seed, t);
    std::vector<double> bids(n), asks(n);
    for (int i = 0; i < n; ++i) bids[i] = rng.next_unit();
    for (int j = 0; j < n; ++j) asks[j] = rng.next_unit();

    auto probe = [&](std::vector<double>& side, int i1, int i2) {
      // shrink the step near the boundary so all four corners stay in [0,1]
      const double h1 = std::min({h, side[i1], 1.0 - side[i1]});
      const double h2 = std::min({h, side[i2], 1.0 - side[i2]});
      if (h1 <= 0.0 || h2 <= 0.0) return;
      const double s1 = side[i1], s2 = side[i2];
      double corners[2][2];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          side[i1] = s1 + (a ? h1 : -h1);
          side[i2] = s2 + (b ? h2 : -h2);
          corners[a][b] = x(bids, asks);
        }
      side[i1] = s1;
      side[i2] = s2;
      const double mixed =
          (corners[1][1] - corners[1][0] - corners[0][1] + corners[0][0]) /
          (4.0 * h1 * h2);
      max_mixed = std::max(max_mixed, std::abs(mixed));
    };

    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = i1 + 1; i2 < n; ++i2) probe(bids, i1, i2);
    for (int j1 = 0; j1 < n; ++j1)
      for (int j2 = j1 + 1; j2 < n; ++j2) probe(asks, j1, j2);
  }
  return max_mixed;
}

std::vector<std::uint64_t> enumerate_monotone_masks(int k) {
  if (k < 0 || k > 6)
    throw UsageError("enumerate_monotone_bool: k must be in [0, 6]");
  // f on k bits is a pair (f0, f1) of monotone functions on k-1 bits with
  // f0 <= f1 pointwise; f0 is the half with the top bit clear.
  std::vector<std::uint64_t> level = {0ull, 1ull};
  for (int bits = 1; bits <= k; ++bits) {
    const int half = 1 << (bits - 1);
    std::vector<std::uint64_t> next;
    for (std::uint64_t lo : level)
      for (std::uint64_t hi : level)
        if ((lo & ~hi) == 0) next.push_back(lo | (hi << half));
    level = std::move(next);
  }
  return level;
}

std::vector<MonotoneBoolFn> enumerate_monotone_bool(int k) {
  std::vector<MonotoneBoolFn> fns;
  for (std::uint64_t mask : enumerate_monotone_masks(k))
    fns.push_back(MonotoneBoolFn::from_mask(k, mask));
  return fns;
}

}  // namespace mbt

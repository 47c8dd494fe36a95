#include <doctest.h>

#include <cmath>

#include "mbt/errors.hpp"
#include "mbt/mechanism.hpp"
#include "mbt/verify.hpp"

using namespace mbt;

namespace {

GridOutcomeFn wrap(MechanismDef mech) {
  return [mech = std::move(mech)](const Profile& p) { return mech.evaluate(p); };
}

}  // namespace

TEST_CASE("check_monotone accepts voting allocations and constants") {
  const MechanismDef voting =
      MechanismDef::voting(2, 0.5, MonotoneBoolFn::threshold(4, 4));
  CHECK(check_monotone(GridAllocation::tabulate(voting, 2, 4)).monotone);
  const GridAllocation ones =
      GridAllocation::from_fn(2, 4, [](const Profile&) { return 1.0; });
  CHECK(check_monotone(ones).monotone);
}

TEST_CASE("check_monotone rejects anti-monotone allocations with a witness") {
  const GridAllocation bad = GridAllocation::from_fn(
      1, 4, [](const Profile& p) { return p.bids[0] < 0.5 ? 1.0 : 0.0; });
  const MonotoneReport rep = check_monotone(bad);
  CHECK_FALSE(rep.monotone);
  CHECK(rep.lo.bids[0] < rep.hi.bids[0]);
}

TEST_CASE("check_ic: forced trade and voting have zero regret") {
  const RegretReport forced = check_ic(wrap(MechanismDef::forced(0.6, 0.4)), 3, 8);
  CHECK(forced.max_regret == 0.0);
  CHECK(forced.violations == 0);
  const RegretReport voting = check_ic(
      wrap(MechanismDef::voting(2, 0.5, MonotoneBoolFn::threshold(4, 3))), 2, 4);
  CHECK(voting.max_regret == 0.0);
  CHECK_FALSE(voting.sampled);
}

TEST_CASE("check_ic: overpriced threshold mechanism has positive regret") {
  // x = 1{b_1 >= 0.5}, p = 0.6 x: buyers with v in [0.5, 0.6) prefer opting
  // out; the worst grid type is v = 0.5 with regret 0.1
  const int n = 1, K = 10;
  auto mech = [](const Profile& p) {
    Outcome o;
    o.x = p.bids[0] >= 0.5 ? 1.0 : 0.0;
    o.p = 0.6 * o.x;
    o.r = o.p;
    return o;
  };
  const RegretReport rep = check_ic(mech, n, K);
  CHECK(rep.max_regret == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(rep.violations > 0);
  CHECK(rep.buyer_side);
  CHECK(rep.true_type == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("check_ic switches to sampling on large grids") {
  const RegretReport rep = check_ic(
      wrap(MechanismDef::voting(3, 0.5, MonotoneBoolFn::threshold(6, 4))), 3, 10);
  CHECK(rep.sampled);
  CHECK(rep.max_regret == 0.0);
  CHECK(rep.profiles_checked >= 100000);
}

TEST_CASE("myerson identity holds for voting and forced trade") {
  CHECK(check_myerson_identity(
            wrap(MechanismDef::voting(2, 0.5, MonotoneBoolFn::threshold(4, 2))),
            2, 4) == 0.0);
  CHECK(check_myerson_identity(wrap(MechanismDef::forced(0.6, 0.4)), 2, 4) == 0.0);
}

TEST_CASE("myerson identity flags perturbed payments") {
  const MechanismDef base =
      MechanismDef::voting(2, 0.5, MonotoneBoolFn::threshold(4, 2));
  auto perturbed = [&base](const Profile& p) {
    Outcome o = base.evaluate(p);
    o.p += 0.01 * p.bids[0];
    return o;
  };
  // each b_1 grid increment adds 0.01 * step to the payment increment
  CHECK(check_myerson_identity(perturbed, 2, 4) >=
        doctest::Approx(0.01 * 0.25).epsilon(1e-9));
}

TEST_CASE("budget classification") {
  const BudgetReport sbb = check_budget(
      wrap(MechanismDef::voting(2, 0.5, MonotoneBoolFn::threshold(4, 2))), 2, 4);
  CHECK(sbb.cls == BudgetClass::SBB);

  auto wbb = [](const Profile& p) {
    Outcome o;
    o.x = p.bids[0] >= 0.5 ? 1.0 : 0.0;
    o.p = 0.5 * o.x;
    o.r = 0.4 * o.x;
    return o;
  };
  const BudgetReport w = check_budget(wbb, 1, 4);
  CHECK(w.cls == BudgetClass::WBB);
  CHECK(w.max_abs_diff == doctest::Approx(0.1).epsilon(1e-12));

  auto deficit = [](const Profile&) { return Outcome{1.0, 0.0, 1.0}; };
  CHECK(check_budget(deficit, 1, 4).cls == BudgetClass::Neither);
}

TEST_CASE("voting conformance recovers tau and a threshold f") {
  const GridAllocation x = GridAllocation::from_fn(2, 4, [](const Profile& p) {
    int s = 0;
    for (double b : p.bids) s += b >= 0.5 ? 1 : 0;
    for (double a : p.asks) s += a <= 0.5 ? 1 : 0;
    return s >= 3 ? 1.0 : 0.0;
  });
  const ConformanceResult res = check_voting_conformance(x);
  CHECK(res.conforms);
  REQUIRE(res.tau.has_value());
  REQUIRE(res.f.has_value());
  // reconstructed (tau, f) reproduce x on every grid profile
  for (std::uint64_t idx = 0; idx < x.profile_count(); ++idx) {
    const Profile q = grid_profile(idx, 2, 4);
    CHECK(static_cast<double>((*res.f)(trade_votes(*res.tau, q))) == x.eval(q));
  }
}

TEST_CASE("voting conformance rejects two distinct thresholds") {
  const GridAllocation x = GridAllocation::from_fn(2, 4, [](const Profile& p) {
    return (p.bids[0] >= 0.25 && p.bids[1] >= 0.75) ? 1.0 : 0.0;
  });
  const ConformanceResult res = check_voting_conformance(x);
  CHECK_FALSE(res.conforms);
  CHECK(res.witness.has_value());
}

TEST_CASE("voting conformance accepts constants") {
  const GridAllocation zero =
      GridAllocation::from_fn(2, 4, [](const Profile&) { return 0.0; });
  CHECK(check_voting_conformance(zero).conforms);
  const GridAllocation one =
      GridAllocation::from_fn(2, 4, [](const Profile&) { return 1.0; });
  CHECK(check_voting_conformance(one).conforms);
}

TEST_CASE("two-sided conformance") {
  const MechanismDef voting =
      MechanismDef::voting(2, 0.5, MonotoneBoolFn::threshold(4, 2));
  CHECK(check_two_sided_conformance(GridAllocation::tabulate(voting, 2, 4)));
  // per-ask threshold: x = 1{b_1 >= a_1}, n = 1
  const GridAllocation perask = GridAllocation::from_fn(
      1, 4, [](const Profile& p) { return p.bids[0] >= p.asks[0] ? 1.0 : 0.0; });
  CHECK(check_two_sided_conformance(perask));
  const GridAllocation twothr = GridAllocation::from_fn(2, 4, [](const Profile& p) {
    return (p.bids[0] >= 0.25 && p.bids[1] >= 0.75) ? 1.0 : 0.0;
  });
  CHECK_FALSE(check_two_sided_conformance(twothr));
}

TEST_CASE("separability estimator") {
  const int n = 2;
  auto additive = [n](const std::vector<double>& b, const std::vector<double>& a) {
    double s = 0.0;
    for (double bi : b) s += bi;
    for (double aj : a) s -= aj;
    return (s + n) / (2.0 * n);
  };
  CHECK(check_separability(additive, n, 1e-3) < 1e-8);

  auto product = [](const std::vector<double>& b, const std::vector<double>&) {
    return b[0] * b[1];
  };
  CHECK(check_separability(product, n, 1e-3) == doctest::Approx(1.0).epsilon(1e-4));

  auto constant = [](const std::vector<double>&, const std::vector<double>&) {
    return 1.0;
  };
  CHECK(check_separability(constant, n, 1e-3) == 0.0);
}

TEST_CASE("monotone enumeration matches the Dedekind sequence") {
  const std::size_t expect[] = {2, 3, 6, 20, 168, 7581};
  for (int k = 0; k <= 5; ++k) {
    const auto fns = enumerate_monotone_bool(k);
    CHECK(fns.size() == expect[k]);
  }
  CHECK(enumerate_monotone_masks(6).size() == 7828354u);
  CHECK_THROWS_AS(enumerate_monotone_bool(7), UsageError);
}

TEST_CASE("enumerated functions at k=2 and k=4 match brute force") {
  for (int k : {2, 4}) {
    std::size_t brute = 0;
    const int cells = 1 << k;
    for (std::uint64_t mask = 0; mask < (1ull << cells); ++mask) {
      bool mono = true;
      for (int e = 0; e < cells && mono; ++e)
        for (int bit = 0; bit < k && mono; ++bit)
          if (!(e & (1 << bit)) && ((mask >> e) & 1) &&
              !((mask >> (e | (1 << bit))) & 1))
            mono = false;
      if (mono) ++brute;
    }
    CHECK(enumerate_monotone_bool(k).size() == brute);
  }
}

TEST_CASE("completeness probe: nonconforming allocations admit no single price") {
  // A monotone deterministic grid allocation that fails voting conformance
  // also fails IC for every synthesized single-price payment family
  // p = tau' x. The grid must resolve both thresholds (K = 4): the per-slice
  // IC price windows are [0, 0.25] for buyer 1 and [0.5, 0.75] for buyer 2,
  // which are disjoint.
  const GridAllocation twothr = GridAllocation::from_fn(2, 4, [](const Profile& p) {
    return (p.bids[0] >= 0.25 && p.bids[1] >= 0.75) ? 1.0 : 0.0;
  });
  REQUIRE(check_monotone(twothr).monotone);
  REQUIRE_FALSE(check_voting_conformance(twothr).conforms);
  for (int k = 0; k <= 8; ++k) {
    const double tau = k / 8.0;  // grid nodes and cell midpoints for K = 4
    auto priced = [&twothr, tau](const Profile& p) {
      Outcome o;
      o.x = twothr.eval(p);
      o.p = o.r = tau * o.x;
      return o;
    };
    CHECK(check_ic(priced, 2, 4).max_regret > 0.0);
  }
}

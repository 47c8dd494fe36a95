#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mbt/mechanism.hpp"

namespace mbt {

using GridAllocFn = std::function<double(const Profile&)>;
using GridOutcomeFn = std::function<Outcome(const Profile&)>;

// Discretized allocation x over grid profiles with coordinates at
// multiples of 1/K. Evaluation is lazy; small grids can be tabulated.
struct GridAllocation {
  int n = 0;
  int K = 0;
  GridAllocFn eval;

  static GridAllocation from_fn(int n, int K, GridAllocFn fn);
  static GridAllocation tabulate(const MechanismDef& mech, int n, int K);
  std::uint64_t profile_count() const { return grid_profile_count(n, K); }
};

struct MonotoneReport {
  bool monotone = true;
  Profile lo, hi;  // violating adjacent pair when !monotone
};

// Nondecreasing in every bid and nonincreasing in every ask across
// adjacent grid points.
MonotoneReport check_monotone(const GridAllocation& x);

struct RegretReport {
  double max_regret = 0.0;
  std::uint64_t violations = 0;
  bool buyer_side = true;
  int agent = -1;
  double true_type = 0.0;
  double deviation = 0.0;
  Profile worst_profile;
  bool sampled = false;               // true when profiles were subsampled
  std::uint64_t profiles_checked = 0;
};

// Max utility shortfall of truthful reporting over all grid profiles,
// agents and grid deviations. Exhaustive when (K+1)^(2n) <= 1e6, else a
// seeded random subset of at least 1e5 profiles. Regret above `tol`
// counts as a violation.
RegretReport check_ic(const GridOutcomeFn& mech, int n, int K,
                      std::uint64_t seed = 1, double tol = 1e-12);

// Largest absolute mismatch between payment/receipt increments and the
// Myerson-formula increments along every single-agent grid line.
double check_myerson_identity(const GridOutcomeFn& mech, int n, int K);

enum class BudgetClass { SBB, WBB, Neither };

struct BudgetReport {
  BudgetClass cls = BudgetClass::SBB;
  double worst_gap = 0.0;  // max over grid of r - p
  double max_abs_diff = 0.0;
};

BudgetReport check_budget(const GridOutcomeFn& mech, int n, int K);

struct ConformanceResult {
  bool conforms = false;
  std::optional<double> tau;
  std::optional<MonotoneBoolFn> f;
  std::optional<std::pair<Profile, Profile>> witness;
};

// Searches for (tau, monotone f of arity 2n) reproducing a deterministic
// grid allocation as a vote over per-agent indicators at price tau.
ConformanceResult check_voting_conformance(const GridAllocation& x);

// Per-ask-vector thresholds over buyer bits and per-bid-vector thresholds
// over seller bits; true iff both directions succeed everywhere.
bool check_two_sided_conformance(const GridAllocation& x);

using SmoothAllocFn =
    std::function<double(const std::vector<double>& bids, const std::vector<double>& asks)>;

// Max absolute within-side mixed partial, estimated by central differences
// at a seeded sample of points. Separable allocations return ~0.
double check_separability(const SmoothAllocFn& x, int n, double h,
                          std::uint64_t seed = 1, std::size_t points = 1000);

// All monotone Boolean functions on k bits (k <= 6); counts follow the
// Dedekind sequence 2, 3, 6, 20, 168, 7581, 7828354.
std::vector<MonotoneBoolFn> enumerate_monotone_bool(int k);

// Same enumeration as packed truth tables (bit e = f(e)).
std::vector<std::uint64_t> enumerate_monotone_masks(int k);

}  // namespace mbt

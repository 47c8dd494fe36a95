#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mbt {

// One realized market: n buyer bids and n seller asks, all in [0, 1].
struct Profile {
  std::vector<double> bids;
  std::vector<double> asks;
  int n() const { return static_cast<int>(bids.size()); }
};

// Shared trade decision x, shared buyer payment p, shared seller receipt r.
struct Outcome {
  double x = 0.0;
  double p = 0.0;
  double r = 0.0;
};

// Monotone Boolean function on k bits: flipping any input 0 -> 1 never
// flips the output 1 -> 0. Stored as an explicit truth table up to
// arity 20; threshold-count functions use a shortcut at any arity.
class MonotoneBoolFn {
 public:
  static constexpr int kMaxTableArity = 20;

  // 1 iff popcount(bits) >= min_count. min_count = 0 is constant 1,
  // min_count = arity + 1 is constant 0.
  static MonotoneBoolFn threshold(int arity, int min_count);

  // Explicit truth table indexed by the input bits as an integer.
  // Throws UsageError if the table is not monotone.
  static MonotoneBoolFn from_table(int arity, std::vector<std::uint8_t> table);

  // Truth table packed into a bitmask; arity <= 6.
  static MonotoneBoolFn from_mask(int arity, std::uint64_t mask);

  static MonotoneBoolFn from_table_hex(int arity, const std::string& hex);

  bool operator()(std::uint32_t bits) const;

  int arity() const { return arity_; }
  bool is_threshold() const { return threshold_m_ >= 0; }
  int threshold_count() const { return threshold_m_; }
  std::uint64_t mask() const;  // arity <= 6
  std::string table_hex() const;

 private:
  MonotoneBoolFn(int arity, int threshold_m, std::vector<std::uint8_t> table)
      : arity_(arity), threshold_m_(threshold_m), table_(std::move(table)) {}
  MonotoneBoolFn(int arity, std::uint64_t mask)
      : arity_(arity), threshold_m_(-1), use_mask_(true), mask_(mask) {}

  int arity_ = 0;
  int threshold_m_ = -1;            // >= 0 for the threshold shortcut
  bool use_mask_ = false;           // packed table for arity <= 6
  std::uint64_t mask_ = 0;
  std::vector<std::uint8_t> table_;  // 2^arity entries when explicit
};

// Trade iff mu_v > mu_c (strict), at the fixed price 0.5 (mu_v + mu_c).
// The outcome never depends on the profile.
Outcome forced_trade(double mu_v, double mu_c, const Profile& profile);

// 2n-bit indicator vector: bit i is 1{bid_i >= tau}, bit n+j is
// 1{ask_j <= tau}. Ties at tau count as 1 (ties break in favor of trade).
std::uint32_t trade_votes(double tau, const Profile& profile);

// f applied to the indicator vector; f must have arity 2n.
int voting_allocation(double tau, const MonotoneBoolFn& f, const Profile& profile);

// Allocation per voting_allocation, price p = r = tau * x.
Outcome voting_outcome(double tau, const MonotoneBoolFn& f, const Profile& profile);

MonotoneBoolFn threshold_count_f(int arity, int m);

// Payment for a single buyer from a 1-d slice of the allocation, evaluated
// on a uniform grid with step 1/grid_k:
//   p = b * x(b) - integral_0^b x(z) dz + offset.
// The integral treats the slice as constant on each grid cell, sampled at
// the cell midpoint, which is exact for piecewise-constant slices. The
// slice must be nondecreasing and b must sit on the grid.
double myerson_buyer_payment(const std::function<double(double)>& x_slice,
                             int grid_k, double bid, double offset);

// Seller analogue: r = a * x(a) + integral_a^1 x(z) dz + offset; the slice
// must be nonincreasing.
double myerson_seller_receipt(const std::function<double(double)>& x_slice,
                              int grid_k, double ask, double offset);

// Sum of per-agent component values; throws ModelError if the result lands
// outside [0, 1] beyond 1e-9.
double separable_allocation(
    const std::vector<std::function<double(double)>>& components,
    const std::vector<double>& side);

// Piecewise-linear 1-d function tabulated at uniform nodes over [0, 1].
struct Component {
  std::vector<double> values;  // at least 2 nodes

  double operator()(double t) const;
  double value_at_0() const { return values.front(); }
  double value_at_1() const { return values.back(); }
  bool nondecreasing() const;
  bool nonincreasing() const;
  // integral_0^t of the interpolant (exact, trapezoid per cell)
  double integral_to(double t) const;
};

// Tagged mechanism description. Evaluation is a pure function of
// (MechanismDef, Profile); instances are immutable and freely shareable.
class MechanismDef {
 public:
  enum class Kind { Forced, Voting, Grid, Separable };

  static MechanismDef forced(double mu_v, double mu_c);
  static MechanismDef voting(int n, double tau, MonotoneBoolFn f);
  // Tables indexed by the mixed-radix grid profile index (see grid_index).
  static MechanismDef tabulated_grid(int n, int K, std::vector<double> x,
                                     std::optional<std::vector<double>> p = {},
                                     std::optional<std::vector<double>> r = {});
  // x = sum_i f_i(b_i) + sum_j g_j(a_j); f_i nondecreasing, g_j
  // nonincreasing, aggregate range within [0, 1]. Payments follow the
  // Myerson integral formula for each side.
  static MechanismDef separable(std::vector<Component> buyer_components,
                                std::vector<Component> seller_components);

  Kind kind() const { return kind_; }
  int n() const { return n_; }
  int grid_resolution() const { return K_; }
  double tau() const { return tau_; }
  const MonotoneBoolFn& aggregator() const;
  const std::vector<Component>& buyer_components() const { return buyer_f_; }
  const std::vector<Component>& seller_components() const { return seller_g_; }

  Outcome evaluate(const Profile& profile) const;

  nlohmann::json to_json() const;
  static MechanismDef from_json(const nlohmann::json& j);

 private:
  MechanismDef() = default;

  Kind kind_ = Kind::Forced;
  int n_ = 0;  // 0 means any profile size (forced trade)
  double mu_v_ = 0.0, mu_c_ = 0.0;
  double tau_ = 0.0;
  std::optional<MonotoneBoolFn> f_;
  int K_ = 0;
  std::vector<double> grid_x_;
  std::optional<std::vector<double>> grid_p_, grid_r_;
  std::vector<Component> buyer_f_, seller_g_;
};

// Mixed-radix index of a grid profile with coordinates in {0..K}:
// bids first, then asks, least significant first.
std::uint64_t grid_index(const Profile& profile, int K);
Profile grid_profile(std::uint64_t index, int n, int K);
std::uint64_t grid_profile_count(int n, int K);

}  // namespace mbt

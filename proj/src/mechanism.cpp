#include "mbt/mechanism.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "mbt/errors.hpp"

namespace mbt {

// ---------------------------------------------------------------------------
// MonotoneBoolFn

namespace {

bool table_is_monotone(int arity, const std::vector<std::uint8_t>& table) {
  const std::uint32_t size = 1u << arity;
  for (std::uint32_t e = 0; e < size; ++e) {
    if (!table[e]) continue;
    // every superset obtained by setting one more bit must stay 1
    for (int b = 0; b < arity; ++b) {
      const std::uint32_t up = e | (1u << b);
      if (up != e && !table[up]) return false;
    }
  }
  return true;
}

}  // namespace

MonotoneBoolFn MonotoneBoolFn::threshold(int arity, int min_count) {
  if (arity < 0) throw UsageError("threshold: negative arity");
  if (min_count < 0 || min_count > arity + 1)
    throw UsageError("threshold: min_count out of range [0, arity + 1]");
  return MonotoneBoolFn(arity, min_count, {});
}

MonotoneBoolFn MonotoneBoolFn::from_table(int arity, std::vector<std::uint8_t> table) {
  if (arity < 0 || arity > kMaxTableArity)
    throw UsageError("from_table: arity must be in [0, 20]");
  if (table.size() != (std::size_t{1} << arity))
    throw UsageError("from_table: table size must be 2^arity");
  for (auto& v : table) v = v ? 1 : 0;
  if (!table_is_monotone(arity, table))
    throw UsageError("from_table: truth table is not monotone");
  return MonotoneBoolFn(arity, -1, std::move(table));
}

MonotoneBoolFn MonotoneBoolFn::from_mask(int arity, std::uint64_t mask) {
  if (arity < 0 || arity > 6) throw UsageError("from_mask: arity must be <= 6");
  const std::uint32_t size = 1u << arity;
  for (std::uint32_t e = 0; e < size; ++e) {
    if (!((mask >> e) & 1u)) continue;
    for (int b = 0; b < arity; ++b) {
      const std::uint32_t up = e | (1u << b);
      if (up != e && !((mask >> up) & 1u))
        throw UsageError("from_mask: truth table is not monotone");
    }
  }
  return MonotoneBoolFn(arity, mask);
}

MonotoneBoolFn MonotoneBoolFn::from_table_hex(int arity, const std::string& hex) {
  if (arity < 0 || arity > kMaxTableArity)
    throw UsageError("from_table_hex: arity must be in [0, 20]");
  const std::size_t size = std::size_t{1} << arity;
  std::vector<std::uint8_t> table(size, 0);
  // hex string is most-significant nibble first
  std::size_t bit = 0;
  for (auto it = hex.rbegin(); it != hex.rend() && bit < size; ++it) {
    const char c = *it;
    int nib;
    if (c >= '0' && c <= '9') nib = c - '0';
    else if (c >= 'a' && c <= 'f') nib = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') nib = c - 'A' + 10;
    else throw UsageError("from_table_hex: invalid hex digit");
    for (int k = 0; k < 4 && bit < size; ++k, ++bit)
      table[bit] = static_cast<std::uint8_t>((nib >> k) & 1);
  }
  return from_table(arity, std::move(table));
}

bool MonotoneBoolFn::operator()(std::uint32_t bits) const {
  if (arity_ < 32) bits &= (1u << arity_) - 1u;
  if (threshold_m_ >= 0) return std::popcount(bits) >= threshold_m_;
  if (use_mask_) return (mask_ >> bits) & 1u;
  return table_[bits] != 0;
}

std::uint64_t MonotoneBoolFn::mask() const {
  if (arity_ > 6) throw UsageError("mask: arity must be <= 6");
  std::uint64_t m = 0;
  for (std::uint32_t e = 0; e < (1u << arity_); ++e)
    if ((*this)(e)) m |= std::uint64_t{1} << e;
  return m;
}

std::string MonotoneBoolFn::table_hex() const {
  if (arity_ > kMaxTableArity) throw UsageError("table_hex: arity too large");
  const std::size_t size = std::size_t{1} << arity_;
  std::string out;
  const std::size_t nibbles = (size + 3) / 4;
  out.reserve(nibbles);
  for (std::size_t nib = nibbles; nib-- > 0;) {
    int v = 0;
    for (int k = 3; k >= 0; --k) {
      const std::size_t bit = nib * 4 + static_cast<std::size_t>(k);
      v <<= 1;
      if (bit < size && (*this)(static_cast<std::uint32_t>(bit))) v |= 1;
    }
    out.push_back("0123456789abcdef"[v]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Core mechanisms

Outcome forced_trade(double mu_v, double mu_c, const Profile&) {
  Outcome out;
  out.x = mu_v > mu_c ? 1.0 : 0.0;
  out.p = out.r = 0.5 * (mu_v + mu_c) * out.x;
  return out;
}

std::uint32_t trade_votes(double tau, const Profile& profile) {
  const int n = profile.n();
  std::uint32_t bits = 0;
  for (int i = 0; i < n; ++i)
    if (profile.bids[i] >= tau) bits |= 1u << i;
  for (int j = 0; j < n; ++j)
    if (profile.asks[j] <= tau) bits |= 1u << (n + j);
  return bits;
}

int voting_allocation(double tau, const MonotoneBoolFn& f, const Profile& profile) {
  if (f.arity() != 2 * profile.n())
    throw UsageError("voting_allocation: aggregator arity must equal 2n");
  return f(trade_votes(tau, profile)) ? 1 : 0;
}

Outcome voting_outcome(double tau, const MonotoneBoolFn& f, const Profile& profile) {
  Outcome out;
  out.x = voting_allocation(tau, f, profile);
  out.p = out.r = tau * out.x;
  return out;
}

MonotoneBoolFn threshold_count_f(int arity, int m) {
  return MonotoneBoolFn::threshold(arity, m);
}

// ---------------------------------------------------------------------------
// Myerson payments on a grid

namespace {

int grid_point_of(double t, int K, const char* what) {
  const double scaled = t * K;
  const long j = std::lround(scaled);
  if (std::abs(scaled - static_cast<double>(j)) > 1e-9 || j < 0 || j > K)
    throw UsageError(std::string(what) + ": argument must sit on the grid");
  return static_cast<int>(j);
}

void require_slice_monotone(const std::function<double(double)>& x_slice, int K,
                            bool nondecreasing, const char* what) {
  double prev = x_slice(0.0);
  for (int k = 1; k <= 2 * K; ++k) {
    const double cur = x_slice(static_cast<double>(k) / (2.0 * K));
    const bool bad = nondecreasing ? cur < prev - 1e-12 : cur > prev + 1e-12;
    if (bad) throw UsageError(std::string(what) + ": slice violates monotonicity");
    prev = cur;
  }
}

}  // namespace

double myerson_buyer_payment(const std::function<double(double)>& x_slice,
                             int grid_k, double bid, double offset) {
  if (grid_k <= 0) throw UsageError("myerson_buyer_payment: grid_k must be positive");
  require_slice_monotone(x_slice, grid_k, /*nondecreasing=*/true,
                         "myerson_buyer_payment");
  const int j = grid_point_of(bid, grid_k, "myerson_buyer_payment");
  double integral = 0.0;
  for (int k = 0; k < j; ++k)
    integral += x_slice((k + 0.5) / grid_k) / grid_k;
  return bid * x_slice(bid) - integral + offset;
}

double myerson_seller_receipt(const std::function<double(double)>& x_slice,
                              int grid_k, double ask, double offset) {
  if (grid_k <= 0) throw UsageError("myerson_seller_receipt: grid_k must be positive");
  require_slice_monotone(x_slice, grid_k, /*nondecreasing=*/false,
                         "myerson_seller_receipt");
  const int j = grid_point_of(ask, grid_k, "myerson_seller_receipt");
  double integral = 0.0;
  for (int k = j; k < grid_k; ++k)
    integral += x_slice((k + 0.5) / grid_k) / grid_k;
  return ask * x_slice(ask) + integral + offset;
}

double separable_allocation(
    const std::vector<std::function<double(double)>>& components,
    const std::vector<double>& side) {
  if (components.size() != side.size())
    throw UsageError("separable_allocation: component count must equal n");
  double x = 0.0;
  for (std::size_t i = 0; i < side.size(); ++i) x += components[i](side[i]);
  if (x < -1e-9 || x > 1.0 + 1e-9)
    throw ModelError("separable_allocation: sum leaves [0,1]");
  return std::min(1.0, std::max(0.0, x));
}

// ---------------------------------------------------------------------------
// Component

double Component::operator()(double t) const {
  const std::size_t cells = values.size() - 1;
  const double s = std::min(1.0, std::max(0.0, t)) * cells;
  const std::size_t k = std::min(cells - 1, static_cast<std::size_t>(s));
  const double frac = s - static_cast<double>(k);
  return values[k] * (1.0 - frac) + values[k + 1] * frac;
}

bool Component::nondecreasing() const {
  for (std::size_t k = 0; k + 1 < values.size(); ++k)
    if (values[k + 1] < values[k] - 1e-12) return false;
  return true;
}

bool Component::nonincreasing() const {
  for (std::size_t k = 0; k + 1 < values.size(); ++k)
    if (values[k + 1] > values[k] + 1e-12) return false;
  return true;
}

double Component::integral_to(double t) const {
  const std::size_t cells = values.size() - 1;
  const double w = 1.0 / cells;
  const double tc = std::min(1.0, std::max(0.0, t));
  double acc = 0.0;
  for (std::size_t k = 0; k < cells; ++k) {
    const double a = k * w, b = (k + 1) * w;
    if (tc <= a) break;
    const double end = std::min(tc, b);
    const double fa = values[k];
    const double fb_at_end = (*this)(end);
    acc += 0.5 * (fa + fb_at_end) * (end - a);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Grid profile indexing

std::uint64_t grid_profile_count(int n, int K) {
  std::uint64_t c = 1;
  for (int i = 0; i < 2 * n; ++i) c *= static_cast<std::uint64_t>(K + 1);
  return c;
}

std::uint64_t grid_index(const Profile& profile, int K) {
  const int n = profile.n();
  std::uint64_t idx = 0, radix = 1;
  auto coord = [K](double t) {
    const long j = std::lround(t * K);
    if (std::abs(t * K - static_cast<double>(j)) > 1e-9 || j < 0 || j > K)
      throw UsageError("grid_index: profile entry is off-grid");
    return static_cast<std::uint64_t>(j);
  };
  for (int i = 0; i < n; ++i, radix *= K + 1) idx += coord(profile.bids[i]) * radix;
  for (int j = 0; j < n; ++j, radix *= K + 1) idx += coord(profile.asks[j]) * radix;
  return idx;
}

Profile grid_profile(std::uint64_t index, int n, int K) {
  Profile p;
  p.bids.resize(n);
  p.asks.resize(n);
  for (int i = 0; i < n; ++i) {
    p.bids[i] = static_cast<double>(index % (K + 1)) / K;
    index /= K + 1;
  }
  for (int j = 0; j < n; ++j) {
    p.asks[j] = static_cast<double>(index % (K + 1)) / K;
    index /= K + 1;
  }
  return p;
}

// ---------------------------------------------------------------------------
// MechanismDef

MechanismDef MechanismDef::forced(double mu_v, double mu_c) {
  MechanismDef m;
  m.kind_ = Kind::Forced;
  m.mu_v_ = mu_v;
  m.mu_c_ = mu_c;
  return m;
}

MechanismDef MechanismDef::voting(int n, double tau, MonotoneBoolFn f) {
  if (n < 1) throw UsageError("voting: n must be >= 1");
  if (f.arity() != 2 * n) throw UsageError("voting: aggregator arity must be 2n");
  if (tau < 0.0 || tau > 1.0) throw UsageError("voting: tau must be in [0,1]");
  MechanismDef m;
  m.kind_ = Kind::Voting;
  m.n_ = n;
  m.tau_ = tau;
  m.f_ = std::move(f);
  return m;
}

MechanismDef MechanismDef::tabulated_grid(int n, int K, std::vector<double> x,
                                          std::optional<std::vector<double>> p,
                                          std::optional<std::vector<double>> r) {
  if (n < 1 || K < 1) throw UsageError("tabulated_grid: need n >= 1 and K >= 1");
  const std::uint64_t count = grid_profile_count(n, K);
  if (x.size() != count || (p && p->size() != count) || (r && r->size() != count))
    throw UsageError("tabulated_grid: table size must be (K+1)^(2n)");
  for (double v : x)
    if (v < 0.0 || v > 1.0)
      throw ModelError("tabulated_grid: allocation entries must be in [0,1]");
  MechanismDef m;
  m.kind_ = Kind::Grid;
  m.n_ = n;
  m.K_ = K;
  m.grid_x_ = std::move(x);
  m.grid_p_ = std::move(p);
  m.grid_r_ = std::move(r);
  return m;
}

MechanismDef MechanismDef::separable(std::vector<Component> buyer_components,
                                     std::vector<Component> seller_components) {
  double lo = 0.0, hi = 0.0;
  for (const auto& f : buyer_components) {
    if (f.values.size() < 2) throw UsageError("separable: component needs >= 2 nodes");
    if (!f.nondecreasing())
      throw ModelError("separable: buyer component must be nondecreasing");
    lo += f.value_at_0();
    hi += f.value_at_1();
  }
  for (const auto& g : seller_components) {
    if (g.values.size() < 2) throw UsageError("separable: component needs >= 2 nodes");
    if (!g.nonincreasing())
      throw ModelError("separable: seller component must be nonincreasing");
    lo += g.value_at_1();
    hi += g.value_at_0();
  }
  if (lo < -1e-9 || hi > 1.0 + 1e-9)
    throw ModelError("separable: aggregate allocation leaves [0,1]");
  MechanismDef m;
  m.kind_ = Kind::Separable;
  m.n_ = static_cast<int>(std::max(buyer_components.size(), seller_components.size()));
  m.buyer_f_ = std::move(buyer_components);
  m.seller_g_ = std::move(seller_components);
  return m;
}

const MonotoneBoolFn& MechanismDef::aggregator() const {
  if (!f_) throw UsageError("aggregator: not a voting mechanism");
  return *f_;
}

Outcome MechanismDef::evaluate(const Profile& profile) const {
  switch (kind_) {
    case Kind::Forced:
      return forced_trade(mu_v_, mu_c_, profile);
    case Kind::Voting:
      if (profile.n() != n_) throw UsageError("evaluate: profile size mismatch");
      return voting_outcome(tau_, *f_, profile);
    case Kind::Grid: {
      if (profile.n() != n_) throw UsageError("evaluate: profile size mismatch");
      const std::uint64_t idx = grid_index(profile, K_);
      Outcome out;
      out.x = grid_x_[idx];
      out.p = grid_p_ ? (*grid_p_)[idx] : 0.0;
      out.r = grid_r_ ? (*grid_r_)[idx] : 0.0;
      return out;
    }
    case Kind::Separable: {
      if (profile.bids.size() != buyer_f_.size() ||
          profile.asks.size() != seller_g_.size())
        throw UsageError("evaluate: profile size mismatch");
      Outcome out;
      for (std::size_t i = 0; i < buyer_f_.size(); ++i) {
        const double b = profile.bids[i];
        out.x += buyer_f_[i](b);
        out.p += b * buyer_f_[i](b) - buyer_f_[i].integral_to(b);
      }
      for (std::size_t j = 0; j < seller_g_.size(); ++j) {
        const double a = profile.asks[j];
        out.x += seller_g_[j](a);
        const double total = seller_g_[j].integral_to(1.0);
        out.r += a * seller_g_[j](a) + (total - seller_g_[j].integral_to(a));
      }
      if (out.x < -1e-9 || out.x > 1.0 + 1e-9)
        throw ModelError("evaluate: separable allocation leaves [0,1]");
      out.x = std::min(1.0, std::max(0.0, out.x));
      return out;
    }
  }
  throw UsageError("evaluate: unknown mechanism kind");
}

nlohmann::json MechanismDef::to_json() const {
  nlohmann::json j;
  switch (kind_) {
    case Kind::Forced:
      j["kind"] = "forced";
      j["mu_v"] = mu_v_;
      j["mu_c"] = mu_c_;
      break;
    case Kind::Voting:
      j["kind"] = "voting";
      j["n"] = n_;
      j["tau"] = tau_;
      if (f_->is_threshold())
        j["f"] = {{"threshold_m", f_->threshold_count()}};
      else
        j["f"] = {{"table_hex", f_->table_hex()}};
      break;
    case Kind::Grid:
      j["kind"] = "grid";
      j["n"] = n_;
      j["K"] = K_;
      j["x"] = grid_x_;
      if (grid_p_) j["p"] = *grid_p_;
      if (grid_r_) j["r"] = *grid_r_;
      break;
    case Kind::Separable: {
      j["kind"] = "separable";
      auto dump = [](const std::vector<Component>& cs) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& c : cs) arr.push_back(c.values);
        return arr;
      };
      j["buyers"] = dump(buyer_f_);
      j["sellers"] = dump(seller_g_);
      break;
    }
  }
  return j;
}

MechanismDef MechanismDef::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "forced")
    return forced(j.at("mu_v").get<double>(), j.at("mu_c").get<double>());
  if (kind == "voting") {
    const int n = j.at("n").get<int>();
    const auto& fj = j.at("f");
    MonotoneBoolFn f =
        fj.contains("threshold_m")
            ? MonotoneBoolFn::threshold(2 * n, fj.at("threshold_m").get<int>())
            : MonotoneBoolFn::from_table_hex(2 * n,
                                             fj.at("table_hex").get<std::string>());
    return voting(n, j.at("tau").get<double>(), std::move(f));
  }
  if (kind == "grid") {
    std::optional<std::vector<double>> p, r;
    if (j.contains("p")) p = j.at("p").get<std::vector<double>>();
    if (j.contains("r")) r = j.at("r").get<std::vector<double>>();
    return tabulated_grid(j.at("n").get<int>(), j.at("K").get<int>(),
                          j.at("x").get<std::vector<double>>(), std::move(p),
                          std::move(r));
  }
  if (kind == "separable") {
    auto load = [](const nlohmann::json& arr) {
      std::vector<Component> cs;
      for (const auto& v : arr) cs.push_back(Component{v.get<std::vector<double>>()});
      return cs;
    };
    return separable(load(j.at("buyers")), load(j.at("sellers")));
  }
  throw ConfigError("from_json: unknown mechanism kind: " + kind);
}

}  // namespace mbt

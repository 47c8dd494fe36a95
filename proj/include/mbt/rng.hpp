#pragma once

#include <cmath>
#include <cstdint>

namespace mbt {

// Counter-based random stream keyed by (master seed, trial index).
// Every trial owns an independent stream, so simulation results are
// bit-identical no matter how trials are scheduled across workers.
class TrialRng {
 public:
  TrialRng(std::uint64_t master_seed, std::uint64_t trial)
      : state_(mix(master_seed ^ mix(trial + kGolden))) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  // Uniform on [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller. Always consumes exactly two uniforms,
  // keeping the stream position a pure function of the draw count.
  double next_normal() {
    double u1 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.28318530717958647692528676655900577 * u2);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace mbt

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace focus {

// PCG64 (XSL-RR 128/64), the same generator numpy exposes as PCG64.
//   state_{n+1} = state_n * 0x2360ed051fc65da44385df649fccf645 + inc
//   output      = rotr64(hi ^ lo, state >> 122)
// Seeding: state = 0, inc = (stream << 1) | 1, step, state += seed, step.
class Pcg64 {
 public:
  using result_type = std::uint64_t;

  explicit Pcg64(std::uint64_t seed, std::uint64_t stream = 0xda3e39cb94b95bdbULL) {
    inc_ = (static_cast<u128>(stream) << 1) | 1u;
    state_ = 0;
    step();
    state_ += seed;
    step();
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    step();
    const auto hi = static_cast<std::uint64_t>(state_ >> 64);
    const auto lo = static_cast<std::uint64_t>(state_);
    const unsigned rot = static_cast<unsigned>(state_ >> 122);
    const std::uint64_t x = hi ^ lo;
    return (x >> rot) | (x << ((64u - rot) & 63u));
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; both variates are consumed in order.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>((*this)() % span);
  }

 private:
  using u128 = unsigned __int128;
  static constexpr u128 kMultiplier =
      (static_cast<u128>(0x2360ed051fc65da4ULL) << 64) | 0x4385df649fccf645ULL;

  void step() { state_ = state_ * kMultiplier + inc_; }

  u128 state_;
  u128 inc_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace focus

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace svkit {

/// Seed plus stream index. Distinct stream ids give statistically
/// independent sequences for the same seed.
struct RngPolicy {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

/// xoshiro256** seeded through SplitMix64 from (seed, stream). All
/// distribution samplers below are implemented here rather than taken from
/// <random> so a given policy yields the same sequence with every standard
/// library.
class Rng {
 public:
  explicit Rng(RngPolicy policy);
  Rng(std::uint64_t seed, std::uint64_t stream) : Rng(RngPolicy{seed, stream}) {}

  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() noexcept;
  double half_normal() noexcept { return std::fabs(normal()); }
  double exponential() noexcept { return -std::log(uniform()); }

  /// Gamma with the given shape and rate (mean shape / rate).
  double gamma(double shape, double rate) noexcept;
  double beta(double a, double b) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Number of failures before the first success of a Bernoulli(p) sequence.
  std::uint64_t geometric(double p) noexcept;

  /// N(0,1) restricted to [lower, inf).
  double truncated_normal_lower(double lower) noexcept;

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace svkit

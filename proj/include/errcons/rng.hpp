#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "errcons/types.hpp"

namespace errcons {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
//
// A stream is addressed by (seed, stream, substream); the remaining counter
// word indexes 128-bit blocks within the stream. Streams with distinct
// addresses are statistically independent, so a simulation can hand every
// work unit its own stream and get bit-identical results under any schedule.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream,
               std::uint32_t substream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on [0,1) with 53 random bits; consumes exactly two 32-bit draws.
  double next_double();

  // One raw 10-round block for the given counter/key, independent of any
  // stream state.  Exposed for the known-answer tests.
  static std::array<std::uint32_t, 4> block(
      const std::array<std::uint32_t, 4>& counter,
      const std::array<std::uint32_t, 2>& key);

 private:
  void refill();
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned buffer_pos_ = 4;  // empty; first draw refills
};

bool sample_bernoulli(PhiloxStream& g, double p);

// Cached log-factorials, shared by the discrete samplers.
class LogFactorialTable {
 public:
  explicit LogFactorialTable(std::size_t max_n);
  double operator()(std::size_t k) const { return table_[k]; }
  double log_choose(std::size_t n, std::size_t k) const {
    return table_[n] - table_[k] - table_[n - k];
  }
  std::size_t max_n() const { return table_.size() - 1; }

 private:
  std::vector<double> table_;
};

// Binomial(n, p) by single-uniform inversion, consuming probability mass
// outward from the mode, larger frontier first. O(sd) expected steps and
// exactly one uniform per variate, so stream budgets stay predictable.
std::size_t sample_binomial(PhiloxStream& g, std::size_t n, double p,
                            const LogFactorialTable& lf);

// Hypergeometric: successes among `draws` taken without replacement from a
// population with `successes` marked. Same inversion scheme as the binomial.
std::size_t sample_hypergeometric(PhiloxStream& g, std::size_t population,
                                  std::size_t successes, std::size_t draws,
                                  const LogFactorialTable& lf);

}  // namespace errcons

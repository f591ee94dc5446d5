#include "errcons/rng.hpp"

#include <cmath>

namespace errcons {

namespace {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                      std::uint32_t& hi) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(product);
  hi = static_cast<std::uint32_t>(product >> 32);
}

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         const std::array<std::uint32_t, 2>& key) {
  std::uint32_t lo0, hi0, lo1, hi1;
  mul_hi_lo(kPhiloxM4x32A, ctr[0], lo0, hi0);
  mul_hi_lo(kPhiloxM4x32B, ctr[2], lo1, hi1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

PhiloxStream::PhiloxStream(std::uint64_t seed, std::uint64_t stream,
                           std::uint32_t substream)
    : counter_{0, static_cast<std::uint32_t>(stream),
               static_cast<std::uint32_t>(stream >> 32), substream},
      key_{static_cast<std::uint32_t>(seed),
           static_cast<std::uint32_t>(seed >> 32)} {}

std::array<std::uint32_t, 4> PhiloxStream::block(
    const std::array<std::uint32_t, 4>& counter,
    const std::array<std::uint32_t, 2>& key) {
  std::array<std::uint32_t, 4> ctr = counter;
  std::array<std::uint32_t, 2> k = key;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kPhiloxW32A;
      k[1] += kPhiloxW32B;
    }
    philox_round(ctr, k);
  }
  return ctr;
}

void PhiloxStream::refill() {
  buffer_ = block(counter_, key_);
  ++counter_[0];  // block index; wraps far beyond any realistic draw budget
  buffer_pos_ = 0;
}

std::uint32_t PhiloxStream::next_u32() {
  if (buffer_pos_ == 4) refill();
  return buffer_[buffer_pos_++];
}

std::uint64_t PhiloxStream::next_u64() {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double PhiloxStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

bool sample_bernoulli(PhiloxStream& g, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw domain_error("probability outside [0,1]");
  return g.next_double() < p;
}

LogFactorialTable::LogFactorialTable(std::size_t max_n) {
  table_.resize(max_n + 1);
  table_[0] = 0.0;
  for (std::size_t k = 1; k <= max_n; ++k)
    table_[k] = std::lgamma(static_cast<double>(k) + 1.0);
}

std::size_t sample_binomial(PhiloxStream& g, std::size_t n, double p,
                            const LogFactorialTable& lf) {
  if (!(p >= 0.0 && p <= 1.0)) throw domain_error("probability outside [0,1]");
  if (n > lf.max_n()) throw domain_error("log-factorial table too small");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;

  const double q = 1.0 - p;
  const double dn = static_cast<double>(n);
  std::size_t mode = static_cast<std::size_t>((dn + 1.0) * p);
  if (mode > n) mode = n;
  const double log_p = std::log(p), log_q = std::log(q);
  const double pm = std::exp(lf.log_choose(n, mode) +
                             static_cast<double>(mode) * log_p +
                             (dn - static_cast<double>(mode)) * log_q);

  const double u = g.next_double();
  double cum = pm;
  if (u < cum) return mode;

  std::size_t lo = mode, hi = mode;
  double pmf_lo = pm, pmf_hi = pm;
  std::size_t last = mode;
  while (lo > 0 || hi < n) {
    const double next_dn =
        lo > 0 ? pmf_lo * (static_cast<double>(lo) * q) /
                     (static_cast<double>(n - lo + 1) * p)
               : -1.0;
    const double next_up =
        hi < n ? pmf_hi * (static_cast<double>(n - hi) * p) /
                     (static_cast<double>(hi + 1) * q)
               : -1.0;
    if (next_up >= next_dn) {
      ++hi;
      pmf_hi = next_up;
      cum += next_up;
      last = hi;
    } else {
      --lo;
      pmf_lo = next_dn;
      cum += next_dn;
      last = lo;
    }
    if (u < cum) return last;
  }
  // Rounding left a sliver of mass unassigned; give it to the least likely
  // point visited so the distortion stays below ~1e-15.
  return last;
}

std::size_t sample_hypergeometric(PhiloxStream& g, std::size_t population,
                                  std::size_t successes, std::size_t draws,
                                  const LogFactorialTable& lf) {
  if (successes > population || draws > population)
    throw domain_error("hypergeometric parameters exceed population");
  if (population > lf.max_n())
    throw domain_error("log-factorial table too small");

  const std::size_t failures = population - successes;
  const std::size_t x_min = draws > failures ? draws - failures : 0;
  const std::size_t x_max = std::min(successes, draws);
  if (x_min == x_max) return x_min;

  // Mode of the pmf; clamped into the support.
  const double md = (static_cast<double>(draws) + 1.0) *
                    (static_cast<double>(successes) + 1.0) /
                    (static_cast<double>(population) + 2.0);
  std::size_t mode = static_cast<std::size_t>(md);
  if (mode < x_min) mode = x_min;
  if (mode > x_max) mode = x_max;

  const double log_denom = lf.log_choose(population, draws);
  const double pm = std::exp(lf.log_choose(successes, mode) +
                             lf.log_choose(failures, draws - mode) -
                             log_denom);

  const double u = g.next_double();
  double cum = pm;
  if (u < cum) return mode;

  // pmf(x+1)/pmf(x) = (K-x)(d-x) / ((x+1)(F-d+x+1)) with K successes,
  // F failures, d draws.
  const auto ratio_up = [&](std::size_t x) {
    return (static_cast<double>(successes - x) *
            static_cast<double>(draws - x)) /
           (static_cast<double>(x + 1) *
            static_cast<double>(failures - draws + x + 1));
  };

  std::size_t lo = mode, hi = mode;
  double pmf_lo = pm, pmf_hi = pm;
  std::size_t last = mode;
  while (lo > x_min || hi < x_max) {
    const double next_dn = lo > x_min ? pmf_lo / ratio_up(lo - 1) : -1.0;
    const double next_up = hi < x_max ? pmf_hi * ratio_up(hi) : -1.0;
    if (next_up >= next_dn) {
      ++hi;
      pmf_hi = next_up;
      cum += next_up;
      last = hi;
    } else {
      --lo;
      pmf_lo = next_dn;
      cum += next_dn;
      last = lo;
    }
    if (u < cum) return last;
  }
  return last;
}

}  // namespace errcons

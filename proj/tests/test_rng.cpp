#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "errcons/rng.hpp"
#include "oracle_values.hpp"

using namespace errcons;

namespace {

using Ctr = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

double binom_pmf(std::size_t n, std::size_t k, double p,
                 const LogFactorialTable& lf) {
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  return std::exp(lf.log_choose(n, k) + static_cast<double>(k) * std::log(p) +
                  static_cast<double>(n - k) * std::log1p(-p));
}

double hyper_pmf(std::size_t population, std::size_t successes,
                 std::size_t draws, std::size_t k,
                 const LogFactorialTable& lf) {
  return std::exp(lf.log_choose(successes, k) +
                  lf.log_choose(population - successes, draws - k) -
                  lf.log_choose(population, draws));
}

// Pearson statistic against exact class probabilities; `cuts` are inclusive
// upper class limits over the value range, the last class absorbing the rest.
double chi2_stat(const std::vector<std::size_t>& counts,
                 const std::vector<double>& probs, std::size_t draws) {
  double stat = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double expect = probs[b] * static_cast<double>(draws);
    const double diff = static_cast<double>(counts[b]) - expect;
    stat += diff * diff / expect;
  }
  return stat;
}

}  // namespace

TEST_CASE("philox known-answer vectors") {
  // zero counter, zero key
  CHECK(PhiloxStream::block(Ctr{0, 0, 0, 0}, Key{0, 0}) ==
        Ctr{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  // all-ones counter and key
  CHECK(PhiloxStream::block(Ctr{0xffffffff, 0xffffffff, 0xffffffff,
                                0xffffffff},
                            Key{0xffffffff, 0xffffffff}) ==
        Ctr{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  // pi-digit counter and key
  CHECK(PhiloxStream::block(Ctr{0x243f6a88, 0x85a308d3, 0x13198a2e,
                                0x03707344},
                            Key{0xa4093822, 0x299f31d0}) ==
        Ctr{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  // stream-shaped address: block 0 of (seed 12345, stream 42, substream 3)
  CHECK(PhiloxStream::block(Ctr{0, 42, 0, 3}, Key{12345, 0}) ==
        Ctr{0xa3dbbd97, 0x7e16f029, 0xcd21ca6c, 0x77deec97});
}

TEST_CASE("stream draws walk the block sequence") {
  PhiloxStream g(12345, 42, 3);
  const Ctr b0{0xa3dbbd97, 0x7e16f029, 0xcd21ca6c, 0x77deec97};
  for (const auto w : b0) CHECK(g.next_u32() == w);
  // fifth draw comes from the next block index
  const Ctr b1 = PhiloxStream::block(Ctr{1, 42, 0, 3}, Key{12345, 0});
  CHECK(g.next_u32() == b1[0]);

  PhiloxStream h(12345, 42, 3);
  CHECK(h.next_u64() ==
        ((static_cast<std::uint64_t>(b0[0]) << 32) | b0[1]));

  PhiloxStream d(12345, 42, 3);
  const double x = d.next_double();
  CHECK(x >= 0.0);
  CHECK(x < 1.0);
  CHECK(d.next_u32() == b0[2]);  // a double consumes exactly two words
}

TEST_CASE("streams differ by any address component") {
  const auto first_u64 = [](std::uint64_t seed, std::uint64_t stream,
                            std::uint32_t sub) {
    PhiloxStream g(seed, stream, sub);
    return g.next_u64();
  };
  const auto base = first_u64(1, 2, 3);
  CHECK(base == first_u64(1, 2, 3));
  CHECK(base != first_u64(2, 2, 3));
  CHECK(base != first_u64(1, 3, 3));
  CHECK(base != first_u64(1, 2, 4));
  // high stream bits land in the third counter word
  CHECK(first_u64(1, 1ull << 40, 3) != first_u64(1, 0, 3));
}

TEST_CASE("uniform doubles look uniform") {
  PhiloxStream g(7, 0, 0);
  const int draws = 100000;
  double sum = 0;
  std::vector<std::size_t> cells(11, 0);
  for (int i = 0; i < draws; ++i) {
    const double x = g.next_double();
    sum += x;
    ++cells[std::min<std::size_t>(static_cast<std::size_t>(x * 11), 10)];
  }
  CHECK(std::abs(sum / draws - 0.5) < 0.005);
  const double stat =
      chi2_stat(cells, std::vector<double>(11, 1.0 / 11.0), draws);
  CHECK(stat < oracle::chi2_crit_999(10));
}

TEST_CASE("log factorial table matches lgamma") {
  const LogFactorialTable lf(200);
  CHECK(lf(0) == 0.0);
  CHECK(lf(1) == 0.0);
  CHECK(lf(5) == doctest::Approx(std::log(120.0)).epsilon(1e-14));
  CHECK(lf(200) == doctest::Approx(std::lgamma(201.0)).epsilon(1e-14));
  CHECK(lf.log_choose(5, 2) == doctest::Approx(std::log(10.0)).epsilon(1e-14));
  CHECK(lf.log_choose(160, 80) ==
        doctest::Approx(std::lgamma(161.0) - 2 * std::lgamma(81.0))
            .epsilon(1e-12));
}

TEST_CASE("pmf helpers match independent references") {
  const LogFactorialTable lf(1280);
  CHECK(binom_pmf(160, 110, 0.69, lf) ==
        doctest::Approx(oracle::kBinomPmf_160_110_069).epsilon(1e-11));
  CHECK(binom_pmf(160, 0, 0.69, lf) ==
        doctest::Approx(oracle::kBinomPmf_160_0_069).epsilon(1e-10));
  CHECK(binom_pmf(20, 7, 0.3, lf) ==
        doctest::Approx(oracle::kBinomPmf_20_7_03).epsilon(1e-12));
  CHECK(binom_pmf(1280, 640, 0.5, lf) ==
        doctest::Approx(oracle::kBinomPmf_1280_640_05).epsilon(1e-11));
  CHECK(hyper_pmf(160, 110, 130, 90, lf) ==
        doctest::Approx(oracle::kHyperPmf_160_110_130_90).epsilon(1e-11));
  CHECK(hyper_pmf(160, 110, 130, 80, lf) ==
        doctest::Approx(oracle::kHyperPmf_160_110_130_80).epsilon(1e-9));
  CHECK(hyper_pmf(20, 5, 8, 2, lf) ==
        doctest::Approx(oracle::kHyperPmf_20_5_8_2).epsilon(1e-12));
}

TEST_CASE("bernoulli draws hit their probability") {
  PhiloxStream g(11, 0, 0);
  const int draws = 100000;
  int hits = 0;
  for (int i = 0; i < draws; ++i) hits += sample_bernoulli(g, 0.31) ? 1 : 0;
  // 4.4 sigma window
  CHECK(std::abs(hits / static_cast<double>(draws) - 0.31) < 0.0065);
  CHECK_THROWS_AS(sample_bernoulli(g, 1.5), domain_error);
}

TEST_CASE("binomial sampler edge cases") {
  const LogFactorialTable lf(64);
  PhiloxStream g(3, 0, 0);
  CHECK(sample_binomial(g, 0, 0.5, lf) == 0);
  CHECK(sample_binomial(g, 10, 0.0, lf) == 0);
  CHECK(sample_binomial(g, 10, 1.0, lf) == 10);
  CHECK_THROWS_AS(sample_binomial(g, 10, -0.1, lf), domain_error);
  CHECK_THROWS_AS(sample_binomial(g, 100, 0.5, lf), domain_error);
  for (int i = 0; i < 1000; ++i) CHECK(sample_binomial(g, 7, 0.4, lf) <= 7);
}

TEST_CASE("binomial sampler consumes one uniform per draw") {
  const LogFactorialTable lf(200);
  PhiloxStream a(17, 5, 0), b(17, 5, 0);
  (void)sample_binomial(a, 160, 0.69, lf);
  (void)b.next_double();
  CHECK(a.next_u32() == b.next_u32());

  PhiloxStream c(17, 6, 0), d(17, 6, 0);
  (void)sample_hypergeometric(c, 160, 110, 130, lf);
  (void)d.next_double();
  CHECK(c.next_u32() == d.next_u32());
}

TEST_CASE("binomial sampler fits the exact distribution") {
  const LogFactorialTable lf(200);

  // 6 classes, df 5
  {
    PhiloxStream g(101, 0, 0);
    const std::size_t draws = 200000;
    std::vector<std::size_t> counts(6, 0);
    for (std::size_t i = 0; i < draws; ++i) {
      const std::size_t k = sample_binomial(g, 20, 0.3, lf);
      counts[k <= 3 ? 0 : (k >= 8 ? 5 : k - 3)]++;
    }
    std::vector<double> probs(6, 0.0);
    for (std::size_t k = 0; k <= 20; ++k)
      probs[k <= 3 ? 0 : (k >= 8 ? 5 : k - 3)] += binom_pmf(20, k, 0.3, lf);
    CHECK(chi2_stat(counts, probs, draws) < oracle::chi2_crit_999(5));
  }

  // 11 classes around the mode of Binomial(160, 0.69), df 10
  {
    PhiloxStream g(102, 0, 0);
    const std::size_t draws = 100000;
    const auto cls = [](std::size_t k) -> std::size_t {
      if (k <= 103) return 0;
      if (k >= 121) return 10;
      return std::min<std::size_t>((k - 102) / 2, 9);
    };
    std::vector<std::size_t> counts(11, 0);
    for (std::size_t i = 0; i < draws; ++i)
      ++counts[cls(sample_binomial(g, 160, 0.69, lf))];
    std::vector<double> probs(11, 0.0);
    for (std::size_t k = 0; k <= 160; ++k)
      probs[cls(k)] += binom_pmf(160, k, 0.69, lf);
    CHECK(chi2_stat(counts, probs, draws) < oracle::chi2_crit_999(10));
  }
}

TEST_CASE("hypergeometric sampler edge cases") {
  const LogFactorialTable lf(64);
  PhiloxStream g(4, 0, 0);
  // single-point supports
  CHECK(sample_hypergeometric(g, 10, 10, 4, lf) == 4);   // all marked
  CHECK(sample_hypergeometric(g, 10, 0, 4, lf) == 0);    // none marked
  CHECK(sample_hypergeometric(g, 10, 4, 10, lf) == 4);   // draw everything
  CHECK(sample_hypergeometric(g, 10, 4, 0, lf) == 0);    // draw nothing
  CHECK_THROWS_AS(sample_hypergeometric(g, 10, 11, 4, lf), domain_error);
  CHECK_THROWS_AS(sample_hypergeometric(g, 10, 4, 11, lf), domain_error);
  CHECK_THROWS_AS(sample_hypergeometric(g, 100, 4, 5, lf), domain_error);
  for (int i = 0; i < 1000; ++i) {
    const auto x = sample_hypergeometric(g, 12, 7, 9, lf);
    CHECK(x >= 4);  // 9 draws, only 5 unmarked
    CHECK(x <= 7);
  }
}

TEST_CASE("hypergeometric sampler fits the exact distribution") {
  const LogFactorialTable lf(200);
  PhiloxStream g(103, 0, 0);
  const std::size_t draws = 100000;
  // support [80, 110], mass concentrated near 89; 6 classes, df 5
  const auto cls = [](std::size_t k) -> std::size_t {
    if (k <= 87) return 0;
    if (k >= 92) return 5;
    return k - 87;
  };
  std::vector<std::size_t> counts(6, 0);
  for (std::size_t i = 0; i < draws; ++i)
    ++counts[cls(sample_hypergeometric(g, 160, 110, 130, lf))];
  std::vector<double> probs(6, 0.0);
  for (std::size_t k = 80; k <= 110; ++k)
    probs[cls(k)] += hyper_pmf(160, 110, 130, k, lf);
  CHECK(chi2_stat(counts, probs, draws) < oracle::chi2_crit_999(5));
}

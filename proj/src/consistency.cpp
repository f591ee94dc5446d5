#include "errcons/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace errcons {

namespace {

void check_fraction(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream msg;
    msg << what << " outside [0,1]: " << v;
    throw domain_error(msg.str());
  }
}

}  // namespace

double observed_overlap(std::span<const std::uint8_t> a,
                        std::span<const std::uint8_t> b) {
  if (a.size() != b.size())
    throw data_error("outcome vectors have different lengths");
  if (a.empty()) throw domain_error("outcome vectors are empty");
  std::size_t e = 0;
  for (std::size_t t = 0; t < a.size(); ++t)
    e += ((a[t] != 0) == (b[t] != 0)) ? 1 : 0;
  return static_cast<double>(e) / static_cast<double>(a.size());
}

double expected_overlap(double p_i, double p_j) {
  check_fraction(p_i, "accuracy");
  check_fraction(p_j, "accuracy");
  return p_i * p_j + (1.0 - p_i) * (1.0 - p_j);
}

double expected_overlap(const AccuracyPair& p) {
  return expected_overlap(p.p_i, p.p_j);
}

std::optional<double> kappa(double c_obs, double c_exp) {
  check_fraction(c_obs, "observed agreement");
  check_fraction(c_exp, "chance agreement");
  if (c_exp == 1.0) return std::nullopt;
  return (c_obs - c_exp) / (1.0 - c_exp);
}

ConsistencyResult pair_consistency(const AlignedOutcomes& outcomes,
                                   const ObserverId& i, const ObserverId& j) {
  const auto ia = outcomes.index_of(i);
  const auto ib = outcomes.index_of(j);
  if (!ia) throw data_error("unknown observer '" + i.str() + "'");
  if (!ib) throw data_error("unknown observer '" + j.str() + "'");

  const auto ra = outcomes.row(*ia);
  const auto rb = outcomes.row(*ib);
  const std::size_t n = outcomes.n();
  std::size_t k_i = 0, k_j = 0, e = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const bool ca = ra[t] != 0, cb = rb[t] != 0;
    k_i += ca;
    k_j += cb;
    e += (ca == cb);
  }

  // Feasibility of e given the marginals; a violation here is impossible for
  // genuine outcome vectors, so treat it as a library bug.
  const auto lo = static_cast<std::size_t>(
      std::abs(static_cast<long long>(k_i + k_j) - static_cast<long long>(n)));
  const auto hi = n - static_cast<std::size_t>(std::abs(
                          static_cast<long long>(k_i) -
                          static_cast<long long>(k_j)));
  if (e < lo || e > hi) throw internal_error("agreement count out of bounds");

  ConsistencyResult r{i, j, n, e, 0.0, 0.0, std::nullopt};
  r.c_obs = static_cast<double>(e) / static_cast<double>(n);
  const double p_i = static_cast<double>(k_i) / static_cast<double>(n);
  const double p_j = static_cast<double>(k_j) / static_cast<double>(n);
  r.c_exp = expected_overlap(p_i, p_j);
  // Degenerate exactly when both observers sit at the same extreme; decided
  // on the integer counts so floating-point noise cannot flip it.
  const bool degenerate =
      (k_i == 0 && k_j == 0) || (k_i == n && k_j == n);
  if (!degenerate) r.kappa = (r.c_obs - r.c_exp) / (1.0 - r.c_exp);
  return r;
}

PairwiseMatrix::PairwiseMatrix(const AlignedOutcomes& outcomes)
    : observers_(outcomes.observers()) {
  if (observers_.size() < 2)
    throw data_error("pairwise analysis needs at least 2 observers");
  const std::size_t k = observers_.size();
  cells_.reserve(k * k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      if (a <= b) {
        cells_.push_back(
            pair_consistency(outcomes, observers_[a], observers_[b]));
      } else {
        // Mirror of a cell from an earlier row; every statistic is
        // pair-symmetric, only the id order flips.
        ConsistencyResult c = cells_[b * k + a];
        std::swap(c.a, c.b);
        cells_.push_back(std::move(c));
      }
    }
}

const ConsistencyResult& PairwiseMatrix::cell(std::size_t i,
                                              std::size_t j) const {
  if (i >= size() || j >= size())
    throw domain_error("matrix index out of range");
  return cells_[i * size() + j];
}

const ConsistencyResult& PairwiseMatrix::cell(const ObserverId& i,
                                              const ObserverId& j) const {
  const auto it_i = std::lower_bound(observers_.begin(), observers_.end(), i);
  const auto it_j = std::lower_bound(observers_.begin(), observers_.end(), j);
  if (it_i == observers_.end() || *it_i != i)
    throw data_error("unknown observer '" + i.str() + "'");
  if (it_j == observers_.end() || *it_j != j)
    throw data_error("unknown observer '" + j.str() + "'");
  return cell(static_cast<std::size_t>(it_i - observers_.begin()),
              static_cast<std::size_t>(it_j - observers_.begin()));
}

PairwiseMatrix pairwise_matrix(const AlignedOutcomes& outcomes) {
  return PairwiseMatrix(outcomes);
}

Interval bounds_cobs(double c_exp) {
  check_fraction(c_exp, "chance agreement");
  if (c_exp <= 0.5) return {0.0, 1.0 - std::sqrt(1.0 - 2.0 * c_exp)};
  return {std::sqrt(2.0 * c_exp - 1.0), 1.0};
}

Interval bounds_cobs_from_accuracies(double p_i, double p_j) {
  check_fraction(p_i, "accuracy");
  check_fraction(p_j, "accuracy");
  const double hi = 1.0 - std::abs(p_i - p_j);
  // the bounds coincide when either accuracy is 0 or 1, and rounding can
  // cross them by an ulp there
  return {std::min(std::abs(p_i + p_j - 1.0), hi), hi};
}

Interval bounds_cobs_from_accuracies(const AccuracyPair& p) {
  return bounds_cobs_from_accuracies(p.p_i, p.p_j);
}

Interval bounds_kappa(double c_exp) {
  check_fraction(c_exp, "chance agreement");
  if (c_exp == 1.0)
    throw domain_error("kappa bounds undefined at chance agreement 1");
  const double d = 1.0 - c_exp;
  if (c_exp <= 0.5) {
    const double hi = (1.0 - std::sqrt(1.0 - 2.0 * c_exp) - c_exp) / d;
    return {-c_exp / d, hi};
  }
  return {(std::sqrt(2.0 * c_exp - 1.0) - c_exp) / d, 1.0};
}

GroupMeanCi group_mean_ci(std::span<const double> kappas, double level) {
  const std::size_t m = kappas.size();
  if (m < 2) throw domain_error("confidence interval needs at least 2 values");
  if (!(level > 0.0 && level < 1.0))
    throw domain_error("confidence level outside (0,1)");
  for (const double k : kappas)
    if (std::isnan(k))
      throw domain_error("undefined values must be filtered before averaging");

  const double mean =
      std::accumulate(kappas.begin(), kappas.end(), 0.0) /
      static_cast<double>(m);
  double ss = 0.0;
  for (const double k : kappas) ss += (k - mean) * (k - mean);
  const double s = std::sqrt(ss / static_cast<double>(m - 1));
  const double z =
      level == 0.95 ? 1.959964 : normal_quantile(0.5 + level / 2.0);
  const double half = z * s / std::sqrt(static_cast<double>(m));
  return {mean, Interval{mean - half, mean + half}};
}

namespace {

// Rational approximation ported from Acklam's classic inverse-normal note,
// then polished with one Halley step against erfc; the step takes the raw
// ~1e-9 approximation down to ~1e-15.
double normal_quantile_raw(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw domain_error("quantile level outside (0,1)");
  double x = normal_quantile_raw(p);
  const double err = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u =
      err * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

}  // namespace errcons

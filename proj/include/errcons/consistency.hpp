#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "errcons/types.hpp"

namespace errcons {

// ---------------------------------------------------------------------------
// Agreement statistics
// ---------------------------------------------------------------------------

// Fraction of positions where the two outcome vectors agree (both correct or
// both incorrect).
double observed_overlap(std::span<const std::uint8_t> a,
                        std::span<const std::uint8_t> b);

// Agreement rate of two independent observers with the given accuracies:
// both right or both wrong by chance.
double expected_overlap(double p_i, double p_j);
double expected_overlap(const AccuracyPair& p);

// Cohen's kappa: observed agreement rescaled against chance agreement.
// Empty when c_exp = 1, where the rescaling degenerates to 0/0.
std::optional<double> kappa(double c_obs, double c_exp);

// Full statistics for one observer pair, accuracies estimated from the rows.
// Self pairs are legal and come out at kappa = 1 unless degenerate.
ConsistencyResult pair_consistency(const AlignedOutcomes& outcomes,
                                   const ObserverId& i, const ObserverId& j);

// Symmetric matrix of pairwise results, diagonal included.
class PairwiseMatrix {
 public:
  explicit PairwiseMatrix(const AlignedOutcomes& outcomes);

  std::size_t size() const noexcept { return observers_.size(); }
  const std::vector<ObserverId>& observers() const noexcept {
    return observers_;
  }
  const ConsistencyResult& cell(std::size_t i, std::size_t j) const;
  const ConsistencyResult& cell(const ObserverId& i, const ObserverId& j) const;

 private:
  std::vector<ObserverId> observers_;
  std::vector<ConsistencyResult> cells_;  // row-major size x size
};

PairwiseMatrix pairwise_matrix(const AlignedOutcomes& outcomes);

// ---------------------------------------------------------------------------
// Feasibility bounds
// ---------------------------------------------------------------------------

// Attainable range of observed agreement given only the chance agreement.
Interval bounds_cobs(double c_exp);

// Attainable range of observed agreement given both accuracies:
// [|p_i + p_j - 1|, 1 - |p_i - p_j|].
Interval bounds_cobs_from_accuracies(double p_i, double p_j);
Interval bounds_cobs_from_accuracies(const AccuracyPair& p);

// Attainable kappa range given the chance agreement; throws domain_error at
// c_exp = 1 where kappa itself is undefined.
Interval bounds_kappa(double c_exp);

// ---------------------------------------------------------------------------
// Group confidence intervals
// ---------------------------------------------------------------------------

struct GroupMeanCi {
  double mean;
  Interval ci;
};

// Normal-approximation CI around the sample mean, sample sd with divisor m-1.
// The 95% z-value is pinned to 1.959964.
GroupMeanCi group_mean_ci(std::span<const double> kappas, double level = 0.95);

// Standard normal quantile, absolute error below 1e-9 on (0,1).
double normal_quantile(double p);

}  // namespace errcons

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "errcons/rng.hpp"
#include "errcons/types.hpp"

namespace errcons {

// One simulated observer pair under the independence null.
struct SimulatedSample {
  double p_i_true = 0, p_j_true = 0;  // grid accuracies the pair was drawn at
  double p_i_hat = 0, p_j_hat = 0;    // accuracies estimated from the draws
  double c_exp_hat = 0, c_obs_hat = 0;
  std::optional<double> kappa_hat;
  std::size_t k_i = 0, k_j = 0, e = 0;  // raw correct / agreement counts
  bool degenerate() const { return !kappa_hat.has_value(); }
};

// count_level draws (k_i, k_j) binomially and the both-correct count
// hypergeometrically; per_trial walks all n Bernoulli trials. The two are
// distributionally identical; count_level is the fast default.
enum class SamplingPath { count_level, per_trial };

enum class TableStat { c_obs, kappa };

// Axis accuracies: tail_fraction of the points in each closed tail
// [0, w] / [1-w, 1], the rest uniform on the open middle. Fewer than 10
// points falls back to a uniform grid over [0,1].
std::vector<double> build_grid(const GridSpec& spec);

// Draws one simulated pair; owns the factorial cache so the hot loop never
// rebuilds it.
class PairSimulator {
 public:
  explicit PairSimulator(std::size_t n_trials,
                         SamplingPath path = SamplingPath::count_level);
  SimulatedSample sample(double p_i, double p_j, PhiloxStream& g) const;
  std::size_t n_trials() const noexcept { return n_; }

 private:
  std::size_t n_;
  SamplingPath path_;
  LogFactorialTable lf_;
};

// Convenience wrapper for one-off draws; builds the cache per call.
SimulatedSample simulate_pair(double p_i, double p_j, std::size_t n_trials,
                              PhiloxStream& g,
                              SamplingPath path = SamplingPath::count_level);

// Full grid sweep: every cell gets reps_per_cell samples, each drawn from its
// own counter-based stream keyed by (seed, cell, rep), so results are
// bit-identical for any worker count. threads = 0 resolves ERRCONS_THREADS,
// then hardware concurrency.
PercentileTable run_simulation(const GridSpec& spec, std::size_t threads = 0,
                               SamplingPath path = SamplingPath::count_level);

// Deterministic single-threaded sweep over the same samples run_simulation
// would aggregate, in (cell, rep) order.
void for_each_sample(const GridSpec& spec,
                     const std::function<void(const SimulatedSample&)>& fn,
                     SamplingPath path = SamplingPath::count_level);

// R's default sample quantile: h = (m-1)p + 1, linear between order stats.
double quantile_type7(std::span<const double> sorted_values, double p);

// Band of the bin containing c_exp, or empty for under-populated bins.
std::optional<Interval> band_lookup(const PercentileTable& table, double c_exp,
                                    TableStat stat = TableStat::kappa);

// Worker count resolution: explicit request, else ERRCONS_THREADS, else
// hardware concurrency. Never returns 0.
std::size_t resolve_thread_count(std::size_t requested);

}  // namespace errcons

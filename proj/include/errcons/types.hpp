#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace errcons {

// Failure taxonomy, mapped onto CLI exit codes by the tool:
//   data_error     bad or inconsistent input (malformed file, misaligned trials)
//   domain_error   argument outside its mathematical domain
//   internal_error broken library invariant; always a bug
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct data_error : error {
  using error::error;
};
struct domain_error : error {
  using error::error;
};
struct internal_error : error {
  using error::error;
};

// Opaque observer label. Comparison is exact byte equality.
class ObserverId {
 public:
  explicit ObserverId(std::string id) : id_(std::move(id)) {
    if (id_.empty()) throw domain_error("observer id must be non-empty");
  }
  const std::string& str() const noexcept { return id_; }

  friend bool operator==(const ObserverId&, const ObserverId&) = default;
  friend std::strong_ordering operator<=>(const ObserverId&,
                                          const ObserverId&) = default;

 private:
  std::string id_;
};

// One observer's correctness verdict on one trial.
struct ResponseRecord {
  ResponseRecord(ObserverId observer_in, std::string trial_in, bool correct_in)
      : observer(std::move(observer_in)),
        trial(std::move(trial_in)),
        is_correct(correct_in) {
    if (trial.empty()) throw domain_error("trial id must be non-empty");
  }
  ObserverId observer;
  std::string trial;  // opaque; no ordering semantics
  bool is_correct;
};

struct AccuracyPair {
  AccuracyPair(double p_i_in, double p_j_in, std::size_t n_in);
  double p_i;
  double p_j;
  std::size_t n;
};

struct Interval {
  Interval(double lo_in, double hi_in) : lo(lo_in), hi(hi_in) {
    if (!(lo <= hi)) throw domain_error("interval lo exceeds hi");
  }
  double lo;
  double hi;
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Agreement statistics for one observer pair. kappa is empty exactly when
// the pair is degenerate (both estimated accuracies 0, or both 1), which is
// the only way the chance-agreement denominator vanishes.
struct ConsistencyResult {
  ObserverId a;
  ObserverId b;
  std::size_t n = 0;
  std::size_t e = 0;  // trials where both were right or both were wrong
  double c_obs = 0;   // e / n
  double c_exp = 0;   // chance agreement from estimated accuracies
  std::optional<double> kappa;
  bool self_pair() const { return a == b; }
};

// Boolean outcome matrix over the shared trial set; rows are observers.
// Observers and trials are kept sorted lexicographically so every downstream
// artifact is independent of input order.
class AlignedOutcomes {
 public:
  // Requires a complete grid: every observer must carry a verdict for every
  // trial seen anywhere in the input. Duplicates and gaps are data errors.
  static AlignedOutcomes from_records(std::span<const ResponseRecord> records);

  std::size_t observer_count() const noexcept { return observers_.size(); }
  std::size_t n() const noexcept { return trials_.size(); }
  const std::vector<ObserverId>& observers() const noexcept {
    return observers_;
  }
  const std::vector<std::string>& trials() const noexcept { return trials_; }

  std::span<const std::uint8_t> row(std::size_t observer_index) const;
  std::optional<std::size_t> index_of(const ObserverId& id) const;
  std::size_t correct_count(std::size_t observer_index) const;

 private:
  AlignedOutcomes(std::vector<ObserverId> observers,
                  std::vector<std::string> trials,
                  std::vector<std::uint8_t> outcomes);
  std::vector<ObserverId> observers_;
  std::vector<std::string> trials_;
  std::vector<std::uint8_t> outcomes_;  // row-major observers x trials
};

// Accuracy-grid configuration for the null simulation.
struct GridSpec {
  std::size_t axis_points = 4200;
  std::size_t reps_per_cell = 5;
  double tail_fraction = 0.33;  // share of axis points in EACH tail
  double tail_width = 0.15;
  std::size_t n_trials = 160;
  std::uint64_t seed = 0;
  std::pair<double, double> quantile_pair{0.025, 0.975};

  void validate() const;  // throws domain_error on any bad field

  static GridSpec preset_160(std::uint64_t seed);
  static GridSpec preset_1280(std::uint64_t seed);

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Percentile row for one (bin, statistic). count is the number of values the
// quantiles summarize; dropped counts values excluded from this statistic's
// pool. band is empty when count falls below the population floor.
struct BinStats {
  std::size_t count = 0;
  std::size_t dropped = 0;
  std::optional<Interval> band;
  friend bool operator==(const BinStats&, const BinStats&) = default;
};

// Null-distribution quantiles of c_obs and kappa, binned by estimated chance
// agreement. Bins are [k*w, (k+1)*w), final bin right-closed at 1.
struct PercentileTable {
  GridSpec spec;
  double bin_width = 0.01;
  std::size_t min_bin_count = 1000;
  std::vector<BinStats> c_obs;
  std::vector<BinStats> kappa;

  std::size_t bin_count() const noexcept { return c_obs.size(); }
  std::size_t bin_index(double c_exp) const;  // throws domain_error off [0,1]
  double bin_lo(std::size_t bin) const;
  double bin_hi(std::size_t bin) const;

  friend bool operator==(const PercentileTable&,
                         const PercentileTable&) = default;
};

}  // namespace errcons

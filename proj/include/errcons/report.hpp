#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "errcons/consistency.hpp"
#include "errcons/ingest.hpp"
#include "errcons/nullsim.hpp"
#include "errcons/types.hpp"

namespace errcons {

// One plotted pair: agreement statistics plus the null band at its chance
// level. The band is the kappa band; the full table keeps both statistics.
struct ScatterPoint {
  ObserverId a;
  ObserverId b;
  std::string group;
  std::size_t n = 0;
  double c_exp = 0;
  double c_obs = 0;
  std::optional<double> kappa;
  std::optional<Interval> band;
};

// Canonical unordered pair label: sorted labels joined by an en dash.
std::string group_label(const std::string& label_a, const std::string& label_b);

// One point per unordered observer pair, self pairs excluded. groups must
// label every observer. With a table, bands are filled per point; the table
// must have been simulated at the data's trial count.
std::vector<ScatterPoint> scatter_report(
    const PairwiseMatrix& matrix,
    const std::map<std::string, std::string>& groups,
    const PercentileTable* table = nullptr);

struct GroupSummary {
  std::optional<double> mean_kappa;  // absent when no usable pairs
  std::optional<Interval> ci;        // absent when fewer than 2 usable pairs
  std::size_t count = 0;             // kappa values averaged
  std::size_t excluded_undefined = 0;
};

std::map<std::string, GroupSummary> group_summary(
    std::span<const ScatterPoint> points, double level = 0.95);

enum class Normalization { none, row };

// Expected-by-response category counts for one observer.
class ConfusionMatrix {
 public:
  ConfusionMatrix(std::vector<std::string> categories,
                  std::vector<std::size_t> counts,
                  Normalization norm = Normalization::none);

  const std::vector<std::string>& categories() const noexcept {
    return categories_;
  }
  std::size_t size() const noexcept { return categories_.size(); }
  std::size_t count(std::size_t expected, std::size_t response) const;
  // Count, or the within-row share under row normalization (all-zero rows
  // stay zero).
  double value(std::size_t expected, std::size_t response) const;
  Normalization normalization() const noexcept { return norm_; }
  ConfusionMatrix row_normalized() const;

 private:
  std::vector<std::string> categories_;
  std::vector<std::size_t> counts_;  // row-major, rows = expected
  Normalization norm_;
};

ConfusionMatrix confusion(std::span<const RawTrialRow> rows,
                          const ObserverId& observer,
                          Normalization norm = Normalization::none);

struct ObserverAccuracy {
  ObserverId observer;
  std::size_t n;
  std::size_t correct;
  double accuracy;
};

std::vector<ObserverAccuracy> accuracy_table(const AlignedOutcomes& outcomes);

// Shortest decimal form at 6 significant digits; used by every report file
// so goldens stay stable.
std::string format_float(double v);
// Shortest round-trip form; used where re-reading must be lossless.
std::string format_exact(double v);

void write_scatter_csv(std::span<const ScatterPoint> points,
                       std::ostream& out);
void write_summary_json(const std::map<std::string, GroupSummary>& summary,
                        std::ostream& out);
void write_accuracy_csv(std::span<const ObserverAccuracy> accuracies,
                        std::ostream& out);
void write_confusion_csv(const ConfusionMatrix& matrix, std::ostream& out);

// Versioned table file: '#'-prefixed header echoing the grid configuration,
// then bin_lo,bin_hi,stat,count,dropped,q_lo,q_hi rows. Floats are written
// round-trip exact, so read(write(t)) == t.
void write_table_file(const PercentileTable& table, std::ostream& out);
PercentileTable read_table_file(std::istream& in);

}  // namespace errcons

#include "errcons/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace errcons {

AccuracyPair::AccuracyPair(double p_i_in, double p_j_in, std::size_t n_in)
    : p_i(p_i_in), p_j(p_j_in), n(n_in) {
  if (!(p_i >= 0.0 && p_i <= 1.0) || !(p_j >= 0.0 && p_j <= 1.0))
    throw domain_error("accuracy outside [0,1]");
  if (n == 0) throw domain_error("trial count must be positive");
}

AlignedOutcomes::AlignedOutcomes(std::vector<ObserverId> observers,
                                 std::vector<std::string> trials,
                                 std::vector<std::uint8_t> outcomes)
    : observers_(std::move(observers)),
      trials_(std::move(trials)),
      outcomes_(std::move(outcomes)) {
  if (trials_.empty()) throw data_error("no trials in input");
  if (observers_.empty()) throw data_error("no observers in input");
  if (outcomes_.size() != observers_.size() * trials_.size())
    throw internal_error("outcome matrix size mismatch");
}

AlignedOutcomes AlignedOutcomes::from_records(
    std::span<const ResponseRecord> records) {
  std::set<ObserverId> observer_set;
  std::set<std::string> trial_set;
  for (const auto& r : records) {
    observer_set.insert(r.observer);
    trial_set.insert(r.trial);
  }
  std::vector<ObserverId> observers(observer_set.begin(), observer_set.end());
  std::vector<std::string> trials(trial_set.begin(), trial_set.end());
  if (observers.empty() || trials.empty())
    throw data_error("no response records");

  std::map<std::string, std::size_t> trial_index;
  for (std::size_t t = 0; t < trials.size(); ++t) trial_index[trials[t]] = t;
  std::map<ObserverId, std::size_t> observer_index;
  for (std::size_t o = 0; o < observers.size(); ++o)
    observer_index[observers[o]] = o;

  const std::size_t n = trials.size();
  std::vector<std::uint8_t> outcomes(observers.size() * n, 0);
  std::vector<std::uint8_t> seen(observers.size() * n, 0);
  for (const auto& r : records) {
    const std::size_t cell =
        observer_index[r.observer] * n + trial_index[r.trial];
    if (seen[cell]) {
      std::ostringstream msg;
      msg << "duplicate record for observer '" << r.observer.str()
          << "', trial '" << r.trial << "'";
      throw data_error(msg.str());
    }
    seen[cell] = 1;
    outcomes[cell] = r.is_correct ? 1 : 0;
  }
  for (std::size_t o = 0; o < observers.size(); ++o)
    for (std::size_t t = 0; t < n; ++t)
      if (!seen[o * n + t]) {
        std::ostringstream msg;
        msg << "observer '" << observers[o].str() << "' has no record for trial '"
            << trials[t] << "'";
        throw data_error(msg.str());
      }
  return AlignedOutcomes(std::move(observers), std::move(trials),
                         std::move(outcomes));
}

std::span<const std::uint8_t> AlignedOutcomes::row(
    std::size_t observer_index) const {
  if (observer_index >= observers_.size())
    throw domain_error("observer index out of range");
  return {outcomes_.data() + observer_index * n(), n()};
}

std::optional<std::size_t> AlignedOutcomes::index_of(
    const ObserverId& id) const {
  const auto it = std::lower_bound(observers_.begin(), observers_.end(), id);
  if (it == observers_.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - observers_.begin());
}

std::size_t AlignedOutcomes::correct_count(std::size_t observer_index) const {
  const auto r = row(observer_index);
  std::size_t k = 0;
  for (const auto v : r) k += v;
  return k;
}

void GridSpec::validate() const {
  if (axis_points == 0) throw domain_error("axis_points must be positive");
  if (reps_per_cell == 0) throw domain_error("reps_per_cell must be positive");
  if (n_trials == 0) throw domain_error("n_trials must be positive");
  if (!(tail_width > 0.0 && tail_width < 0.5))
    throw domain_error("tail_width must lie in (0, 0.5)");
  if (!(tail_fraction >= 0.0 && tail_fraction <= 0.5))
    throw domain_error("tail_fraction must lie in [0, 0.5]");
  const auto [q_lo, q_hi] = quantile_pair;
  if (!(q_lo > 0.0 && q_lo < q_hi && q_hi < 1.0))
    throw domain_error("quantile pair must satisfy 0 < lo < hi < 1");
}

GridSpec GridSpec::preset_160(std::uint64_t seed) {
  GridSpec s;
  s.n_trials = 160;
  s.seed = seed;
  return s;
}

GridSpec GridSpec::preset_1280(std::uint64_t seed) {
  GridSpec s;
  s.n_trials = 1280;
  s.seed = seed;
  return s;
}

std::size_t PercentileTable::bin_index(double c_exp) const {
  if (bin_count() == 0) throw internal_error("percentile table has no bins");
  if (!(c_exp >= 0.0 && c_exp <= 1.0))
    throw domain_error("chance agreement outside [0,1]");
  const auto k =
      static_cast<std::size_t>(c_exp * static_cast<double>(bin_count()));
  return std::min(k, bin_count() - 1);  // c_exp = 1 joins the last bin
}

double PercentileTable::bin_lo(std::size_t bin) const {
  return static_cast<double>(bin) / static_cast<double>(bin_count());
}

double PercentileTable::bin_hi(std::size_t bin) const {
  return static_cast<double>(bin + 1) / static_cast<double>(bin_count());
}

}  // namespace errcons

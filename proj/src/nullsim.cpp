#include "errcons/nullsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "errcons/consistency.hpp"

namespace errcons {

std::vector<double> build_grid(const GridSpec& spec) {
  spec.validate();
  const std::size_t a = spec.axis_points;
  std::vector<double> pts;
  pts.reserve(a);

  if (a < 10) {
    // Too few points for the tail layout to mean anything.
    if (a == 1) {
      pts.push_back(0.5);
      return pts;
    }
    for (std::size_t i = 0; i < a; ++i)
      pts.push_back(static_cast<double>(i) / static_cast<double>(a - 1));
    return pts;
  }

  std::size_t tail = static_cast<std::size_t>(
      std::llround(spec.tail_fraction * static_cast<double>(a)));
  tail = std::min(tail, a / 2);
  const std::size_t mid = a - 2 * tail;
  const double w = spec.tail_width;

  if (tail == 1) {
    pts.push_back(w / 2.0);
  } else if (tail > 1) {
    for (std::size_t i = 0; i < tail; ++i)
      pts.push_back(w * static_cast<double>(i) /
                    static_cast<double>(tail - 1));
  }
  for (std::size_t k = 1; k <= mid; ++k)
    pts.push_back(w + (1.0 - 2.0 * w) * static_cast<double>(k) /
                          static_cast<double>(mid + 1));
  if (tail == 1) {
    pts.push_back(1.0 - w / 2.0);
  } else if (tail > 1) {
    for (std::size_t i = 0; i < tail; ++i)
      pts.push_back(1.0 - w +
                    w * static_cast<double>(i) / static_cast<double>(tail - 1));
  }
  return pts;
}

PairSimulator::PairSimulator(std::size_t n_trials, SamplingPath path)
    : n_(n_trials), path_(path), lf_(n_trials) {
  if (n_trials == 0) throw domain_error("n_trials must be positive");
}

SimulatedSample PairSimulator::sample(double p_i, double p_j,
                                      PhiloxStream& g) const {
  if (!(p_i >= 0.0 && p_i <= 1.0) || !(p_j >= 0.0 && p_j <= 1.0))
    throw domain_error("accuracy outside [0,1]");

  std::size_t k_i = 0, k_j = 0, e = 0;
  if (path_ == SamplingPath::count_level) {
    k_i = sample_binomial(g, n_, p_i, lf_);
    k_j = sample_binomial(g, n_, p_j, lf_);
    // Conditioned on the marginals, the both-correct count is
    // hypergeometric; agreement = both-correct + both-wrong.
    const std::size_t both = sample_hypergeometric(g, n_, k_i, k_j, lf_);
    e = n_ - k_i - k_j + 2 * both;
  } else {
    for (std::size_t t = 0; t < n_; ++t) {
      const bool a = sample_bernoulli(g, p_i);
      const bool b = sample_bernoulli(g, p_j);
      k_i += a;
      k_j += b;
      e += (a == b);
    }
  }

  SimulatedSample s;
  s.p_i_true = p_i;
  s.p_j_true = p_j;
  s.k_i = k_i;
  s.k_j = k_j;
  s.e = e;
  const double dn = static_cast<double>(n_);
  s.p_i_hat = static_cast<double>(k_i) / dn;
  s.p_j_hat = static_cast<double>(k_j) / dn;
  s.c_exp_hat = expected_overlap(s.p_i_hat, s.p_j_hat);
  s.c_obs_hat = static_cast<double>(e) / dn;
  const bool degenerate =
      (k_i == 0 && k_j == 0) || (k_i == n_ && k_j == n_);
  if (!degenerate)
    s.kappa_hat = (s.c_obs_hat - s.c_exp_hat) / (1.0 - s.c_exp_hat);
  return s;
}

SimulatedSample simulate_pair(double p_i, double p_j, std::size_t n_trials,
                              PhiloxStream& g, SamplingPath path) {
  return PairSimulator(n_trials, path).sample(p_i, p_j, g);
}

std::size_t resolve_thread_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ERRCONS_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 4096) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

double quantile_type7(std::span<const double> sorted_values, double p) {
  if (sorted_values.empty()) throw domain_error("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw domain_error("quantile level outside [0,1]");
  const std::size_t m = sorted_values.size();
  const double h = static_cast<double>(m - 1) * p;
  const auto j = static_cast<std::size_t>(h);
  if (j + 1 >= m) return sorted_values[m - 1];
  return sorted_values[j] +
         (h - static_cast<double>(j)) *
             (sorted_values[j + 1] - sorted_values[j]);
}

namespace {

// Per-bin worker state: agreement counts go into an exact histogram (c_obs
// lives on the e/n lattice); kappa values are kept raw for sorting later.
struct BinAccum {
  std::vector<std::uint64_t> e_hist;
  std::vector<double> kappas;
  std::uint64_t total = 0;
  std::uint64_t dropped = 0;
};

// Must match PercentileTable::bin_index: floor(c * bins), last bin closed.
inline std::size_t bin_of(double c_exp, std::size_t bins) {
  const auto k =
      static_cast<std::size_t>(c_exp * static_cast<double>(bins));
  return std::min(k, bins - 1);
}

// j-th (0-based) order statistic of the histogram's expanded multiset.
double hist_order_stat(const std::vector<std::uint64_t>& hist, std::size_t n,
                       std::uint64_t j) {
  std::uint64_t cum = 0;
  for (std::size_t t = 0; t <= n; ++t) {
    cum += hist[t];
    if (j < cum)
      return static_cast<double>(t) / static_cast<double>(n);
  }
  throw internal_error("order statistic beyond histogram population");
}

// Type-7 quantile evaluated on the histogram without expanding it.
double hist_quantile_type7(const std::vector<std::uint64_t>& hist,
                           std::size_t n, std::uint64_t m, double p) {
  const double h = static_cast<double>(m - 1) * p;
  const auto j = static_cast<std::uint64_t>(h);
  if (j + 1 >= m) return hist_order_stat(hist, n, m - 1);
  const double x0 = hist_order_stat(hist, n, j);
  const double x1 = hist_order_stat(hist, n, j + 1);
  return x0 + (h - static_cast<double>(j)) * (x1 - x0);
}

}  // namespace

PercentileTable run_simulation(const GridSpec& spec, std::size_t threads,
                               SamplingPath path) {
  spec.validate();
  const auto grid = build_grid(spec);
  const std::size_t axis = grid.size();
  const std::size_t cells = axis * axis;
  const std::size_t reps = spec.reps_per_cell;
  const std::size_t n = spec.n_trials;
  constexpr std::size_t kBins = 100;

  const std::size_t workers = std::min(resolve_thread_count(threads), cells);
  std::vector<std::vector<BinAccum>> locals(workers,
                                            std::vector<BinAccum>(kBins));

  const auto sweep = [&](std::size_t w) {
    const PairSimulator sim(n, path);
    auto& acc = locals[w];
    const std::size_t begin = cells * w / workers;
    const std::size_t end = cells * (w + 1) / workers;
    for (std::size_t cell = begin; cell < end; ++cell) {
      const double p_i = grid[cell / axis];
      const double p_j = grid[cell % axis];
      for (std::size_t r = 0; r < reps; ++r) {
        PhiloxStream g(spec.seed, cell, static_cast<std::uint32_t>(r));
        const SimulatedSample s = sim.sample(p_i, p_j, g);
        BinAccum& ba = acc[bin_of(s.c_exp_hat, kBins)];
        if (ba.e_hist.empty()) ba.e_hist.resize(n + 1, 0);
        ++ba.e_hist[s.e];
        ++ba.total;
        if (s.kappa_hat)
          ba.kappas.push_back(*s.kappa_hat);
        else
          ++ba.dropped;
      }
    }
  };

  if (workers == 1) {
    sweep(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(sweep, w);
    for (auto& t : pool) t.join();
  }

  PercentileTable table;
  table.spec = spec;
  table.bin_width = 0.01;
  table.min_bin_count = 1000;
  table.c_obs.resize(kBins);
  table.kappa.resize(kBins);
  const auto [q_lo, q_hi] = spec.quantile_pair;

  // Merge order cannot matter: histogram sums are commutative and the kappa
  // pool is sorted before quantiles, so any worker split yields the same
  // table bit for bit.
  for (std::size_t b = 0; b < kBins; ++b) {
    std::vector<std::uint64_t> hist;
    std::vector<double> kaps;
    std::uint64_t total = 0, dropped = 0;
    std::size_t pool_size = 0;
    for (const auto& lw : locals) pool_size += lw[b].kappas.size();
    kaps.reserve(pool_size);
    for (auto& lw : locals) {
      BinAccum& ba = lw[b];
      if (!ba.e_hist.empty()) {
        if (hist.empty()) hist.resize(n + 1, 0);
        for (std::size_t t = 0; t <= n; ++t) hist[t] += ba.e_hist[t];
      }
      kaps.insert(kaps.end(), ba.kappas.begin(), ba.kappas.end());
      total += ba.total;
      dropped += ba.dropped;
      ba = BinAccum{};  // release as we go; the pools are large at full scale
    }
    std::sort(kaps.begin(), kaps.end());

    BinStats& co = table.c_obs[b];
    co.count = total;
    co.dropped = 0;
    if (total >= table.min_bin_count)
      co.band = Interval{hist_quantile_type7(hist, n, total, q_lo),
                         hist_quantile_type7(hist, n, total, q_hi)};

    BinStats& ka = table.kappa[b];
    ka.count = kaps.size();
    ka.dropped = dropped;
    if (kaps.size() >= table.min_bin_count)
      ka.band = Interval{quantile_type7(kaps, q_lo), quantile_type7(kaps, q_hi)};
  }
  return table;
}

void for_each_sample(const GridSpec& spec,
                     const std::function<void(const SimulatedSample&)>& fn,
                     SamplingPath path) {
  spec.validate();
  const auto grid = build_grid(spec);
  const std::size_t axis = grid.size();
  const PairSimulator sim(spec.n_trials, path);
  for (std::size_t cell = 0; cell < axis * axis; ++cell) {
    const double p_i = grid[cell / axis];
    const double p_j = grid[cell % axis];
    for (std::size_t r = 0; r < spec.reps_per_cell; ++r) {
      PhiloxStream g(spec.seed, cell, static_cast<std::uint32_t>(r));
      fn(sim.sample(p_i, p_j, g));
    }
  }
}

std::optional<Interval> band_lookup(const PercentileTable& table, double c_exp,
                                    TableStat stat) {
  const auto& rows = stat == TableStat::c_obs ? table.c_obs : table.kappa;
  return rows[table.bin_index(c_exp)].band;
}

}  // namespace errcons

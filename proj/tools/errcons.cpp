#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "errcons/consistency.hpp"
#include "errcons/ingest.hpp"
#include "errcons/nullsim.hpp"
#include "errcons/report.hpp"
#include "errcons/types.hpp"

namespace fs = std::filesystem;
using namespace errcons;

namespace {

// Exit codes: 0 ok, 1 usage, 2 bad data or domain values, 3 internal bug.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

ColumnMapping mapping_for(const std::string& profile) {
  if (profile == "canonical") return ColumnMapping::canonical();
  if (profile == "published-behavioral")
    return ColumnMapping::published_behavioral();
  return ColumnMapping::load(profile);  // treat as a mapping config path
}

std::map<std::string, std::string> load_groups(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open groups file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("bad groups file '" + path + "': " + e.what());
  }
  if (!j.is_object())
    throw data_error("groups file '" + path +
                     "' must be a JSON object of observer: label");
  std::map<std::string, std::string> groups;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string())
      throw data_error("groups file '" + path + "': label for '" + key +
                       "' must be a string");
    groups[key] = value.get<std::string>();
  }
  return groups;
}

struct AnalyzeOpts {
  std::vector<std::string> inputs;
  std::string profile = "canonical";
  std::string groups_path;
  std::string policy = "require-complete";
  std::string band_table;
  bool no_band = false;
  std::string out_dir;
};

int run_analyze(const AnalyzeOpts& opts) {
  const ColumnMapping mapping = mapping_for(opts.profile);

  std::vector<RawTrialRow> rows;
  for (const auto& path : opts.inputs) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open input '" + path + "'");
    auto file_rows = parse_responses(in, mapping, path);
    rows.insert(rows.end(), std::make_move_iterator(file_rows.begin()),
                std::make_move_iterator(file_rows.end()));
  }

  const AlignPolicy policy = opts.policy == "intersect"
                                 ? AlignPolicy::intersect
                                 : AlignPolicy::require_complete;
  const AlignResult aligned = align(rows, policy);

  std::map<std::string, std::string> groups;
  if (!opts.groups_path.empty()) {
    groups = load_groups(opts.groups_path);
  } else {
    for (const auto& o : aligned.outcomes.observers())
      groups[o.str()] = "observer";
  }

  std::optional<PercentileTable> table;
  if (!opts.band_table.empty()) {
    std::ifstream in(opts.band_table);
    if (!in)
      throw data_error("cannot open band table '" + opts.band_table + "'");
    table = read_table_file(in);
  }

  const PairwiseMatrix matrix = pairwise_matrix(aligned.outcomes);
  const auto points =
      scatter_report(matrix, groups, table ? &*table : nullptr);
  const auto summary = group_summary(points);
  const auto accuracies = accuracy_table(aligned.outcomes);

  fs::create_directories(opts.out_dir);
  const auto write_to = [&](const char* name, const auto& writer) {
    const fs::path p = fs::path(opts.out_dir) / name;
    std::ofstream out(p);
    if (!out) throw data_error("cannot write '" + p.string() + "'");
    writer(out);
  };
  write_to("scatter.csv",
           [&](std::ostream& o) { write_scatter_csv(points, o); });
  write_to("summary.json",
           [&](std::ostream& o) { write_summary_json(summary, o); });
  write_to("accuracy.csv",
           [&](std::ostream& o) { write_accuracy_csv(accuracies, o); });

  std::cout << "aligned " << aligned.outcomes.observer_count()
            << " observers on " << aligned.outcomes.n() << " shared trials\n";
  std::cout << "correctness: " << aligned.explicit_rows
            << " rows explicit, " << aligned.derived_rows << " derived ("
            << aligned.derived_incorrect << " judged incorrect)\n";
  for (const auto& [obs, dropped] : aligned.dropped_trials)
    std::cout << "dropped " << dropped << " unshared trial(s) of observer '"
              << obs << "'\n";
  std::cout << "wrote scatter.csv, summary.json, accuracy.csv to "
            << opts.out_dir << "\n";
  return kExitOk;
}

struct SimulateOpts {
  std::size_t n = 160;
  std::size_t axis = 4200;
  std::size_t reps = 5;
  std::uint64_t seed = 0;
  std::string quantiles;
  std::string preset;
  std::string out;
};

int run_simulate(const SimulateOpts& opts, bool n_given, bool axis_given,
                 bool reps_given) {
  GridSpec spec;
  if (!opts.preset.empty())
    spec = opts.preset == "paper-1280" ? GridSpec::preset_1280(opts.seed)
                                       : GridSpec::preset_160(opts.seed);
  spec.seed = opts.seed;
  if (n_given) spec.n_trials = opts.n;
  if (axis_given) spec.axis_points = opts.axis;
  if (reps_given) spec.reps_per_cell = opts.reps;
  if (!opts.quantiles.empty()) {
    const auto comma = opts.quantiles.find(',');
    if (comma == std::string::npos)
      throw domain_error("--quantiles expects 'lo,hi'");
    try {
      spec.quantile_pair = {std::stod(opts.quantiles.substr(0, comma)),
                            std::stod(opts.quantiles.substr(comma + 1))};
    } catch (const std::exception&) {
      throw domain_error("--quantiles expects 'lo,hi' as numbers");
    }
  }
  spec.validate();

  const auto summarize = [](const PercentileTable& t) {
    std::uint64_t samples = 0, dropped = 0;
    for (const auto& b : t.c_obs) samples += b.count;
    for (const auto& b : t.kappa) dropped += b.dropped;
    return std::make_pair(samples, dropped);
  };

  // Reuse a cached table when the file already answers this exact request.
  if (fs::exists(opts.out)) {
    std::ifstream in(opts.out);
    if (in) {
      try {
        const PercentileTable cached = read_table_file(in);
        if (cached.spec == spec && cached.bin_width == PercentileTable{}.bin_width &&
            cached.min_bin_count == PercentileTable{}.min_bin_count) {
          const auto [samples, dropped] = summarize(cached);
          std::cout << "reusing cached table '" << opts.out << "' ("
                    << samples << " samples, " << dropped
                    << " degenerate)\n";
          return kExitOk;
        }
      } catch (const data_error&) {
        // Not a readable table; fall through and recompute.
      }
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const PercentileTable table = run_simulation(spec);
  const auto t1 = std::chrono::steady_clock::now();

  const fs::path out_path(opts.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  std::ofstream out(out_path);
  if (!out) throw data_error("cannot write '" + opts.out + "'");
  write_table_file(table, out);

  const auto [samples, dropped] = summarize(table);
  const double secs =
      std::chrono::duration<double>(t1 - t0).count();
  std::cout << "simulated " << samples << " samples (" << dropped
            << " degenerate, excluded from kappa pools) in " << std::fixed
            << std::setprecision(1) << secs << " s\n";
  std::cout << "wrote " << opts.out << "\n";
  return kExitOk;
}

struct BoundsOpts {
  std::vector<double> cexp;
  std::vector<std::string> acc;
};

std::string bounds_row(const Interval& cobs, const std::optional<Interval>& kap) {
  std::ostringstream row;
  row << format_float(cobs.lo) << ' ' << format_float(cobs.hi) << ' ';
  if (kap)
    row << format_float(kap->lo) << ' ' << format_float(kap->hi);
  else
    row << "undefined undefined";
  return row.str();
}

int run_bounds(const BoundsOpts& opts) {
  if (opts.cexp.empty() && opts.acc.empty())
    throw domain_error("bounds needs --cexp or --acc values");
  bool any_failed = false;
  for (const double c : opts.cexp) {
    try {
      const Interval cobs = bounds_cobs(c);
      std::optional<Interval> kap;
      if (c != 1.0) kap = bounds_kappa(c);
      std::cout << bounds_row(cobs, kap) << "\n";
    } catch (const error& e) {
      std::cerr << "error: " << e.what() << "\n";
      any_failed = true;
    }
  }
  for (const auto& pair_text : opts.acc) {
    try {
      const auto comma = pair_text.find(',');
      if (comma == std::string::npos)
        throw domain_error("--acc expects 'p,q', got '" + pair_text + "'");
      double p = 0, q = 0;
      try {
        p = std::stod(pair_text.substr(0, comma));
        q = std::stod(pair_text.substr(comma + 1));
      } catch (const std::exception&) {
        throw domain_error("--acc expects 'p,q' as numbers, got '" +
                           pair_text + "'");
      }
      const Interval cobs = bounds_cobs_from_accuracies(p, q);
      const double c = expected_overlap(p, q);
      std::optional<Interval> kap;
      if (c != 1.0) kap = Interval{*kappa(cobs.lo, c), *kappa(cobs.hi, c)};
      std::cout << bounds_row(cobs, kap) << "\n";
    } catch (const error& e) {
      std::cerr << "error: " << e.what() << "\n";
      any_failed = true;
    }
  }
  return any_failed ? kExitData : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Error-consistency analysis for binary-outcome observers"};
  app.require_subcommand(1);

  AnalyzeOpts a;
  auto* analyze =
      app.add_subcommand("analyze", "Compute agreement reports from CSVs");
  analyze->add_option("--input", a.inputs, "input CSV file(s)")->required();
  analyze->add_option("--profile", a.profile,
                      "canonical | published-behavioral | mapping JSON path");
  analyze->add_option("--groups", a.groups_path,
                      "JSON file mapping observer ids to group labels");
  analyze
      ->add_option("--policy", a.policy, "trial alignment policy")
      ->check(CLI::IsMember({"require-complete", "intersect"}));
  auto* band_opt = analyze->add_option("--band-table", a.band_table,
                                       "percentile table for null bands");
  analyze->add_flag("--no-band", a.no_band, "skip null bands (default)")
      ->excludes(band_opt);
  analyze->add_option("--out", a.out_dir, "output directory")->required();

  SimulateOpts s;
  auto* simulate =
      app.add_subcommand("simulate", "Build a null percentile table");
  auto* n_opt = simulate->add_option("--n", s.n, "trials per observer");
  auto* axis_opt = simulate->add_option("--axis", s.axis, "grid axis points");
  auto* reps_opt =
      simulate->add_option("--reps", s.reps, "repetitions per grid cell");
  simulate->add_option("--seed", s.seed, "simulation seed");
  simulate->add_option("--quantiles", s.quantiles,
                       "quantile pair as 'lo,hi' (default 0.025,0.975)");
  simulate
      ->add_option("--preset", s.preset, "named configuration")
      ->check(CLI::IsMember({"paper-160", "paper-1280"}));
  simulate->add_option("--out", s.out, "output table file")->required();

  BoundsOpts b;
  auto* bounds =
      app.add_subcommand("bounds", "Print feasibility bounds per input");
  bounds->add_option("--cexp", b.cexp, "chance agreement value(s)");
  bounds->add_option("--acc", b.acc, "accuracy pair(s) as 'p,q'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*analyze) return run_analyze(a);
    if (*simulate)
      return run_simulate(s, n_opt->count() > 0, axis_opt->count() > 0,
                          reps_opt->count() > 0);
    return run_bounds(b);
  } catch (const internal_error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

#include "errcons/report.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace errcons {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string format_exact(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string group_label(const std::string& label_a,
                        const std::string& label_b) {
  const auto& [lo, hi] = std::minmax(label_a, label_b);
  return lo + "–" + hi;
}

std::vector<ScatterPoint> scatter_report(
    const PairwiseMatrix& matrix,
    const std::map<std::string, std::string>& groups,
    const PercentileTable* table) {
  for (const auto& o : matrix.observers())
    if (!groups.contains(o.str()))
      throw data_error("no group label for observer '" + o.str() + "'");
  if (table && table->spec.n_trials != matrix.cell(0, 0).n) {
    std::ostringstream msg;
    msg << "band table was simulated at n = " << table->spec.n_trials
        << " but the data has n = " << matrix.cell(0, 0).n
        << "; bands are trial-count specific";
    throw data_error(msg.str());
  }

  std::vector<ScatterPoint> points;
  const std::size_t k = matrix.size();
  points.reserve(k * (k - 1) / 2);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const ConsistencyResult& c = matrix.cell(i, j);
      ScatterPoint p{c.a,
                     c.b,
                     group_label(groups.at(c.a.str()), groups.at(c.b.str())),
                     c.n,
                     c.c_exp,
                     c.c_obs,
                     c.kappa,
                     std::nullopt};
      if (table) p.band = band_lookup(*table, c.c_exp, TableStat::kappa);
      points.push_back(std::move(p));
    }
  return points;
}

std::map<std::string, GroupSummary> group_summary(
    std::span<const ScatterPoint> points, double level) {
  std::map<std::string, std::vector<double>> usable;
  std::map<std::string, std::size_t> excluded;
  for (const auto& p : points) {
    usable.try_emplace(p.group);
    excluded.try_emplace(p.group, 0);
    if (p.kappa)
      usable[p.group].push_back(*p.kappa);
    else
      ++excluded[p.group];
  }

  std::map<std::string, GroupSummary> out;
  for (auto& [group, ks] : usable) {
    GroupSummary g;
    g.count = ks.size();
    g.excluded_undefined = excluded[group];
    if (ks.size() == 1) {
      g.mean_kappa = ks.front();
    } else if (ks.size() >= 2) {
      const GroupMeanCi ci = group_mean_ci(ks, level);
      g.mean_kappa = ci.mean;
      g.ci = ci.ci;
    }
    out.emplace(group, std::move(g));
  }
  return out;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> categories,
                                 std::vector<std::size_t> counts,
                                 Normalization norm)
    : categories_(std::move(categories)),
      counts_(std::move(counts)),
      norm_(norm) {
  if (counts_.size() != categories_.size() * categories_.size())
    throw internal_error("confusion matrix shape mismatch");
}

std::size_t ConfusionMatrix::count(std::size_t expected,
                                   std::size_t response) const {
  if (expected >= size() || response >= size())
    throw domain_error("confusion matrix index out of range");
  return counts_[expected * size() + response];
}

double ConfusionMatrix::value(std::size_t expected,
                              std::size_t response) const {
  const auto c = count(expected, response);
  if (norm_ == Normalization::none) return static_cast<double>(c);
  std::size_t row_sum = 0;
  for (std::size_t r = 0; r < size(); ++r) row_sum += count(expected, r);
  if (row_sum == 0) return 0.0;
  return static_cast<double>(c) / static_cast<double>(row_sum);
}

ConfusionMatrix ConfusionMatrix::row_normalized() const {
  return ConfusionMatrix(categories_, counts_, Normalization::row);
}

namespace {

std::string trimmed(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

ConfusionMatrix confusion(std::span<const RawTrialRow> rows,
                          const ObserverId& observer, Normalization norm) {
  std::set<std::string> cat_set;
  std::vector<std::pair<std::string, std::string>> pairs;
  bool found = false;
  for (const auto& row : rows) {
    if (row.observer != observer.str()) continue;
    found = true;
    if (!row.expected || !row.response) {
      std::ostringstream msg;
      msg << "row at " << row.source << ":" << row.line
          << " lacks expected/response categories";
      throw data_error(msg.str());
    }
    auto e = trimmed(*row.expected), r = trimmed(*row.response);
    cat_set.insert(e);
    cat_set.insert(r);
    pairs.emplace_back(std::move(e), std::move(r));
  }
  if (!found)
    throw data_error("observer '" + observer.str() + "' has no rows");

  std::vector<std::string> categories(cat_set.begin(), cat_set.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < categories.size(); ++i) index[categories[i]] = i;
  std::vector<std::size_t> counts(categories.size() * categories.size(), 0);
  for (const auto& [e, r] : pairs)
    ++counts[index[e] * categories.size() + index[r]];
  return ConfusionMatrix(std::move(categories), std::move(counts), norm);
}

std::vector<ObserverAccuracy> accuracy_table(const AlignedOutcomes& outcomes) {
  std::vector<ObserverAccuracy> out;
  out.reserve(outcomes.observer_count());
  for (std::size_t o = 0; o < outcomes.observer_count(); ++o) {
    const std::size_t correct = outcomes.correct_count(o);
    out.push_back({outcomes.observers()[o], outcomes.n(), correct,
                   static_cast<double>(correct) /
                       static_cast<double>(outcomes.n())});
  }
  return out;
}

void write_scatter_csv(std::span<const ScatterPoint> points,
                       std::ostream& out) {
  out << "observer_a,observer_b,group,n,c_exp,c_obs,kappa,band_lo,band_hi\n";
  for (const auto& p : points) {
    out << csv_field(p.a.str()) << ',' << csv_field(p.b.str()) << ','
        << csv_field(p.group) << ',' << p.n << ',' << format_float(p.c_exp)
        << ',' << format_float(p.c_obs) << ',';
    if (p.kappa) out << format_float(*p.kappa);
    out << ',';
    if (p.band) out << format_float(p.band->lo);
    out << ',';
    if (p.band) out << format_float(p.band->hi);
    out << '\n';
  }
}

void write_summary_json(const std::map<std::string, GroupSummary>& summary,
                        std::ostream& out) {
  out << "{\n";
  bool first = true;
  for (const auto& [group, g] : summary) {
    if (!first) out << ",\n";
    first = false;
    out << "  " << json_string(group) << ": {\n";
    out << "    \"mean_kappa\": "
        << (g.mean_kappa ? format_float(*g.mean_kappa) : "null") << ",\n";
    out << "    \"ci_lo\": " << (g.ci ? format_float(g.ci->lo) : "null")
        << ",\n";
    out << "    \"ci_hi\": " << (g.ci ? format_float(g.ci->hi) : "null")
        << ",\n";
    out << "    \"count\": " << g.count << ",\n";
    out << "    \"excluded_undefined\": " << g.excluded_undefined << "\n";
    out << "  }";
  }
  if (!first) out << "\n";
  out << "}\n";
}

void write_accuracy_csv(std::span<const ObserverAccuracy> accuracies,
                        std::ostream& out) {
  out << "observer_id,n,correct,accuracy\n";
  for (const auto& a : accuracies)
    out << csv_field(a.observer.str()) << ',' << a.n << ',' << a.correct
        << ',' << format_float(a.accuracy) << '\n';
}

void write_confusion_csv(const ConfusionMatrix& matrix, std::ostream& out) {
  out << "expected";
  for (const auto& c : matrix.categories()) out << ',' << csv_field(c);
  out << '\n';
  for (std::size_t e = 0; e < matrix.size(); ++e) {
    out << csv_field(matrix.categories()[e]);
    for (std::size_t r = 0; r < matrix.size(); ++r) {
      out << ',';
      if (matrix.normalization() == Normalization::none)
        out << matrix.count(e, r);
      else
        out << format_float(matrix.value(e, r));
    }
    out << '\n';
  }
}

namespace {

constexpr const char* kTableMagic = "# errcons percentile table v1";

void write_bin_row(std::ostream& out, double lo, double hi, const char* stat,
                   const BinStats& b) {
  out << format_exact(lo) << ',' << format_exact(hi) << ',' << stat << ','
      << b.count << ',' << b.dropped << ',';
  if (b.band) out << format_exact(b.band->lo);
  out << ',';
  if (b.band) out << format_exact(b.band->hi);
  out << '\n';
}

double parse_double(const std::string& s, const char* what) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw data_error(std::string("bad ") + what + " value '" + s +
                     "' in table file");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw data_error(std::string("bad ") + what + " value '" + s +
                     "' in table file");
  return v;
}

std::vector<std::string> split_plain(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write_table_file(const PercentileTable& table, std::ostream& out) {
  const GridSpec& s = table.spec;
  out << kTableMagic << '\n';
  out << "# axis_points=" << s.axis_points << " reps_per_cell="
      << s.reps_per_cell << " tail_fraction=" << format_exact(s.tail_fraction)
      << " tail_width=" << format_exact(s.tail_width) << " n_trials="
      << s.n_trials << " seed=" << s.seed << " quantile_lo="
      << format_exact(s.quantile_pair.first) << " quantile_hi="
      << format_exact(s.quantile_pair.second) << " bin_width="
      << format_exact(table.bin_width) << " min_bin_count="
      << table.min_bin_count << '\n';
  out << "bin_lo,bin_hi,stat,count,dropped,q_lo,q_hi\n";
  for (std::size_t b = 0; b < table.bin_count(); ++b) {
    write_bin_row(out, table.bin_lo(b), table.bin_hi(b), "c_obs",
                  table.c_obs[b]);
    write_bin_row(out, table.bin_lo(b), table.bin_hi(b), "kappa",
                  table.kappa[b]);
  }
}

PercentileTable read_table_file(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTableMagic)
    throw data_error("not a percentile table file (bad magic line)");
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw data_error("percentile table file lacks the configuration line");

  PercentileTable table;
  GridSpec& s = table.spec;
  for (const auto& tok : split_plain(line.substr(2), ' ')) {
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw data_error("bad configuration token '" + tok + "' in table file");
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "axis_points") s.axis_points = parse_u64(val, "axis_points");
    else if (key == "reps_per_cell")
      s.reps_per_cell = parse_u64(val, "reps_per_cell");
    else if (key == "tail_fraction")
      s.tail_fraction = parse_double(val, "tail_fraction");
    else if (key == "tail_width")
      s.tail_width = parse_double(val, "tail_width");
    else if (key == "n_trials") s.n_trials = parse_u64(val, "n_trials");
    else if (key == "seed") s.seed = parse_u64(val, "seed");
    else if (key == "quantile_lo")
      s.quantile_pair.first = parse_double(val, "quantile_lo");
    else if (key == "quantile_hi")
      s.quantile_pair.second = parse_double(val, "quantile_hi");
    else if (key == "bin_width")
      table.bin_width = parse_double(val, "bin_width");
    else if (key == "min_bin_count")
      table.min_bin_count = parse_u64(val, "min_bin_count");
    else
      throw data_error("unknown configuration key '" + key +
                       "' in table file");
  }

  if (!std::getline(in, line) ||
      line != "bin_lo,bin_hi,stat,count,dropped,q_lo,q_hi")
    throw data_error("percentile table file lacks the column header");

  std::size_t row_no = 0;
  std::vector<std::pair<double, double>> edges;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_plain(line, ',');
    if (f.size() != 7)
      throw data_error("bad table row '" + line + "'");
    const bool kappa_row = row_no % 2 == 1;
    const char* expected_stat = kappa_row ? "kappa" : "c_obs";
    if (f[2] != expected_stat)
      throw data_error("table rows out of order: expected stat '" +
                       std::string(expected_stat) + "', got '" + f[2] + "'");
    BinStats b;
    b.count = parse_u64(f[3], "count");
    b.dropped = parse_u64(f[4], "dropped");
    const bool has_lo = !f[5].empty(), has_hi = !f[6].empty();
    if (has_lo != has_hi)
      throw data_error("table row has a half-empty band: '" + line + "'");
    if (has_lo)
      b.band = Interval{parse_double(f[5], "q_lo"), parse_double(f[6], "q_hi")};
    auto& rows = kappa_row ? table.kappa : table.c_obs;
    rows.push_back(std::move(b));
    if (!kappa_row)
      edges.emplace_back(parse_double(f[0], "bin_lo"),
                         parse_double(f[1], "bin_hi"));
    ++row_no;
  }
  if (table.c_obs.empty()) throw data_error("percentile table has no bins");
  if (table.c_obs.size() != table.kappa.size())
    throw data_error("percentile table ends mid-bin");
  const auto expected_bins = static_cast<std::size_t>(
      std::llround(1.0 / table.bin_width));
  if (table.c_obs.size() != expected_bins)
    throw data_error("table bin count disagrees with its bin width");
  for (std::size_t b = 0; b < table.bin_count(); ++b)
    if (edges[b].first != table.bin_lo(b) || edges[b].second != table.bin_hi(b))
      throw data_error("table bin edges disagree with the bin layout");
  return table;
}

}  // namespace errcons

#include "errcons/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace errcons {

namespace {

std::string location(const std::string& source, std::size_t line) {
  std::ostringstream s;
  s << source << ":" << line;
  return s.str();
}

// Splits one CSV line; supports RFC-style quoting with "" escapes. Embedded
// newlines are not supported (a quote left open is an error).
std::vector<std::string> split_csv(const std::string& line,
                                   const std::string& source,
                                   std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted)
    throw data_error("unterminated quote at " + location(source, line_no));
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return s;
}

bool parse_bool(const std::string& raw, const std::string& source,
                std::size_t line_no) {
  const std::string v = lower(trim(raw));
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw data_error("bad boolean '" + raw + "' at " + location(source, line_no));
}

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

}  // namespace

ColumnMapping ColumnMapping::canonical() { return {}; }

ColumnMapping ColumnMapping::published_behavioral() {
  ColumnMapping m;
  m.observer_col = "subj";
  m.trial_col = "imagename";
  m.expected_col = "category";
  m.response_col = "object_response";
  return m;
}

ColumnMapping ColumnMapping::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open column mapping '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("bad column mapping '" + path + "': " + e.what());
  }
  if (!j.is_object())
    throw data_error("column mapping '" + path + "' must be a JSON object");
  ColumnMapping m;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string())
      throw data_error("column mapping '" + path + "': key '" + key +
                       "' must map to a column name string");
    const std::string name = value.get<std::string>();
    if (key == "observer") m.observer_col = name;
    else if (key == "trial") m.trial_col = name;
    else if (key == "is_correct") m.correct_col = name;
    else if (key == "expected") m.expected_col = name;
    else if (key == "response") m.response_col = name;
    else
      throw data_error("column mapping '" + path + "': unknown key '" + key +
                       "'");
  }
  return m;
}

std::vector<RawTrialRow> parse_responses(std::istream& in,
                                         const ColumnMapping& mapping,
                                         const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line))
    throw data_error("empty input: " + source_name);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line, source_name, line_no);

  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t col_observer = npos, col_trial = npos, col_correct = npos,
              col_expected = npos, col_response = npos;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == mapping.observer_col) col_observer = c;
    else if (header[c] == mapping.trial_col) col_trial = c;
    else if (header[c] == mapping.correct_col) col_correct = c;
    else if (header[c] == mapping.expected_col) col_expected = c;
    else if (header[c] == mapping.response_col) col_response = c;
  }
  if (col_observer == npos)
    throw data_error("missing column '" + mapping.observer_col + "' in " +
                     source_name);
  if (col_trial == npos)
    throw data_error("missing column '" + mapping.trial_col + "' in " +
                     source_name);
  const bool has_categories = col_expected != npos && col_response != npos;
  if (col_correct == npos && !has_categories)
    throw data_error("no correctness source in " + source_name +
                     ": need column '" + mapping.correct_col +
                     "' or both '" + mapping.expected_col + "' and '" +
                     mapping.response_col + "'");

  std::vector<RawTrialRow> rows;
  std::map<std::pair<std::string, std::string>, std::size_t> first_line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line, source_name, line_no);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "expected " << header.size() << " fields, got " << fields.size()
          << " at " << location(source_name, line_no);
      throw data_error(msg.str());
    }

    RawTrialRow row;
    row.observer = fields[col_observer];
    row.trial = fields[col_trial];
    row.source = source_name;
    row.line = line_no;
    if (row.observer.empty())
      throw data_error("empty observer id at " +
                       location(source_name, line_no));
    if (row.trial.empty())
      throw data_error("empty trial id at " + location(source_name, line_no));
    if (col_correct != npos && !fields[col_correct].empty())
      row.is_correct = parse_bool(fields[col_correct], source_name, line_no);
    if (col_expected != npos) row.expected = fields[col_expected];
    if (col_response != npos) row.response = fields[col_response];
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != col_observer && c != col_trial && c != col_correct &&
          c != col_expected && c != col_response)
        row.extra.emplace_back(header[c], fields[c]);

    const auto key = std::make_pair(row.observer, row.trial);
    const auto [it, fresh] = first_line.emplace(key, line_no);
    if (!fresh) {
      std::ostringstream msg;
      msg << "duplicate record for observer '" << row.observer << "', trial '"
          << row.trial << "': lines " << it->second << " and " << line_no
          << " of " << source_name;
      throw data_error(msg.str());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool derive_correctness(const RawTrialRow& row, MatchMode mode) {
  if (row.is_correct.has_value()) return *row.is_correct;
  if (!row.expected.has_value() || !row.response.has_value())
    throw data_error("row at " + location(row.source, row.line) +
                     " has neither a correctness verdict nor an "
                     "expected/response pair");
  std::string e = trim(*row.expected), r = trim(*row.response);
  if (mode == MatchMode::case_insensitive) {
    e = lower(std::move(e));
    r = lower(std::move(r));
  }
  return e == r;
}

AlignResult align(std::span<const RawTrialRow> rows, AlignPolicy policy,
                  MatchMode mode) {
  if (rows.empty()) throw data_error("no rows to align");

  // Cross-file duplicates; same-file ones were already rejected at parse.
  std::map<std::pair<std::string, std::string>, const RawTrialRow*> seen;
  for (const auto& row : rows) {
    const auto key = std::make_pair(row.observer, row.trial);
    const auto [it, fresh] = seen.emplace(key, &row);
    if (!fresh) {
      std::ostringstream msg;
      msg << "duplicate record for observer '" << row.observer << "', trial '"
          << row.trial << "' (" << location(it->second->source,
                                            it->second->line)
          << " and " << location(row.source, row.line) << ")";
      throw data_error(msg.str());
    }
  }

  std::map<std::string, std::set<std::string>> trials_of;
  for (const auto& row : rows) trials_of[row.observer].insert(row.trial);
  if (trials_of.size() < 2)
    throw data_error("alignment needs at least 2 observers");

  std::set<std::string> kept;
  std::map<std::string, std::size_t> dropped;
  if (policy == AlignPolicy::require_complete) {
    std::set<std::string> all;
    for (const auto& [obs, ts] : trials_of) all.insert(ts.begin(), ts.end());
    for (const auto& [obs, ts] : trials_of)
      for (const auto& t : all)
        if (!ts.contains(t))
          throw data_error("observer '" + obs + "' has no record for trial '" +
                           t + "' (complete alignment required)");
    kept = std::move(all);
  } else {
    auto it = trials_of.begin();
    kept = it->second;
    for (++it; it != trials_of.end(); ++it) {
      std::set<std::string> next;
      std::set_intersection(kept.begin(), kept.end(), it->second.begin(),
                            it->second.end(),
                            std::inserter(next, next.begin()));
      kept = std::move(next);
    }
    if (kept.empty()) throw data_error("no trial shared by all observers");
    for (const auto& [obs, ts] : trials_of) {
      const std::size_t d = ts.size() - kept.size();
      if (d > 0) dropped[obs] = d;
    }
  }

  std::size_t explicit_rows = 0, derived_rows = 0, derived_incorrect = 0;
  std::vector<ResponseRecord> records;
  records.reserve(rows.size());
  for (const auto& row : rows) {
    if (!kept.contains(row.trial)) continue;
    const bool correct = derive_correctness(row, mode);
    if (row.is_correct.has_value()) {
      ++explicit_rows;
    } else {
      ++derived_rows;
      if (!correct) ++derived_incorrect;
    }
    records.emplace_back(ObserverId(row.observer), row.trial, correct);
  }

  return AlignResult{AlignedOutcomes::from_records(records),
                     std::move(dropped), explicit_rows, derived_rows,
                     derived_incorrect};
}

void write_canonical_csv(const AlignedOutcomes& outcomes, std::ostream& out) {
  out << "observer_id,trial_id,is_correct\n";
  for (std::size_t o = 0; o < outcomes.observer_count(); ++o) {
    const auto row = outcomes.row(o);
    for (std::size_t t = 0; t < outcomes.n(); ++t)
      out << csv_field(outcomes.observers()[o].str()) << ','
          << csv_field(outcomes.trials()[t]) << ','
          << (row[t] ? "true" : "false") << '\n';
  }
}

}  // namespace errcons

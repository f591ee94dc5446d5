#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errcons/types.hpp"

namespace errcons {

// One parsed data row before alignment. Carries either an explicit
// correctness verdict or an expected/response category pair, plus enough
// provenance to point diagnostics at the offending line.
struct RawTrialRow {
  std::string observer;
  std::string trial;
  std::optional<std::string> expected;
  std::optional<std::string> response;
  std::optional<bool> is_correct;
  std::string source;    // file label for diagnostics
  std::size_t line = 0;  // 1-based line in source
  std::vector<std::pair<std::string, std::string>> extra;  // unmapped columns
};

// Declarative column mapping from a CSV header onto RawTrialRow fields.
struct ColumnMapping {
  std::string observer_col = "observer_id";
  std::string trial_col = "trial_id";
  std::string correct_col = "is_correct";
  std::string expected_col = "expected";
  std::string response_col = "response";

  static ColumnMapping canonical();
  // Layout used by published trial-level behavioral data dumps: one row per
  // (subject, image) with the presented category and the chosen category.
  static ColumnMapping published_behavioral();
  // JSON file with keys observer/trial/is_correct/expected/response; absent
  // keys keep the canonical names.
  static ColumnMapping load(const std::string& path);
};

// Parses one CSV stream. Requires a header naming the observer and trial
// columns plus at least one correctness source (the boolean column, or the
// expected/response pair). Duplicate (observer, trial) rows are an error
// naming both lines. Unmapped columns are preserved per row.
std::vector<RawTrialRow> parse_responses(std::istream& in,
                                         const ColumnMapping& mapping,
                                         const std::string& source_name);

enum class MatchMode { strict, case_insensitive };

// Explicit is_correct wins; otherwise expected and response are compared
// after trimming surrounding whitespace.
bool derive_correctness(const RawTrialRow& row, MatchMode mode);

enum class AlignPolicy { require_complete, intersect };

struct AlignResult {
  AlignedOutcomes outcomes;
  // Rows per observer excluded by intersect alignment; empty otherwise.
  std::map<std::string, std::size_t> dropped_trials;
  std::size_t explicit_rows = 0;
  std::size_t derived_rows = 0;
  std::size_t derived_incorrect = 0;
};

// Groups rows by observer, reconciles trial sets per the policy, derives
// correctness, and builds the outcome matrix. Rows may come from several
// files; duplicates across files are detected here.
AlignResult align(std::span<const RawTrialRow> rows,
                  AlignPolicy policy = AlignPolicy::require_complete,
                  MatchMode mode = MatchMode::strict);

// Canonical form: header observer_id,trial_id,is_correct with true/false
// values, rows sorted by observer then trial. Re-ingesting reproduces the
// matrix exactly.
void write_canonical_csv(const AlignedOutcomes& outcomes, std::ostream& out);

}  // namespace errcons

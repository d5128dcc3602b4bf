#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

namespace beamcal {

// One beam-selection event. `rewards` is kept sorted descending and may be
// shorter than candidate_count (logs truncate the tail). `selected_rank` is
// the 0-based rank of the chosen candidate in that ordering; absent when the
// source log had no SELECTED line (record is incomplete, not fatal).
struct SelectionRecord {
  int depth = 1;
  int candidate_count = 1;
  std::vector<double> rewards;
  std::optional<int> selected_rank;
  std::optional<std::vector<std::string>> answer_tags;
  std::optional<std::vector<bool>> correctness;
  nlohmann::json extra;  // unknown JSONL fields, preserved on round-trip

  /// Sorts rewards descending (parallel permutation of tags/correctness).
  void normalize();
  bool incomplete() const { return !selected_rank.has_value(); }
};

enum class Scorer { perplexity, prm, synthetic };

std::string to_string(Scorer s);
Scorer scorer_from_string(const std::string& s);

struct RunResult {
  std::string problem_id;
  std::string model_name;
  Scorer scorer = Scorer::synthetic;
  int beam_width = 1;
  std::int64_t seed = 0;
  std::string subject;
  bool correct = false;
  double final_reward = 0.0;
};

struct MacroCell {
  double mean_percent = 0.0;
  double standard_error_percent = 0.0;
  int count = 0;  // number of (subject, seed) cells aggregated
};

struct MacroSummary {
  // (model_name, scorer, beam_width) -> cell statistics
  std::map<std::tuple<std::string, Scorer, int>, MacroCell> cells;
  // (model_name, scorer) -> mean(k_max) - mean(k=1), percent points
  std::map<std::pair<std::string, Scorer>, double> deltas;
  std::vector<std::string> warnings;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& message, std::size_t line);
  std::size_t line_number;
};

/// Parses the bracketed "[BEAM_SELECT] depth=.. | candidates=.." text log
/// dialect. Rewards come from the "#rank: reward=..." lines at full
/// precision, falling back to the top_rewards line when no such lines exist.
/// Throws ParseError (with line number) on malformed headers; a missing
/// SELECTED line only leaves the record incomplete.
std::vector<SelectionRecord> parse_beam_select_text(const std::string& text);

/// JSONL: one record per line, fields depth, candidates, rewards,
/// selected_rank, answer_tags, correctness. Unknown fields are preserved on
/// read and ignored semantically.
std::vector<SelectionRecord> read_selection_jsonl(std::istream& source);
void write_selection_jsonl(const std::vector<SelectionRecord>& records,
                           std::ostream& sink);

struct ResultsTable {
  std::vector<RunResult> rows;
  int duplicate_warnings = 0;  // repeated (problem_id, beam_width, seed) rows
};

/// Comma-delimited run results with a mandatory header row naming
/// problem_id, model_name, scorer, beam_width, seed, subject, correct,
/// final_reward. Booleans accept true/false and 1/0. Throws ParseError
/// naming the missing column or the offending row/column.
ResultsTable read_results_table(std::istream& source);
void write_results_table(const std::vector<RunResult>& rows, std::ostream& sink);

/// Per-(model, scorer, beam width) success rates: the rate is computed per
/// (subject, seed) cell first, then mean and standard error are taken
/// across cells. Deltas are mean(k_max) - mean(k=1) per (model, scorer).
MacroSummary aggregate_macro(const std::vector<RunResult>& results);

}  // namespace beamcal

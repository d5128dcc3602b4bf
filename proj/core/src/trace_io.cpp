#include "beamcal/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace beamcal {

using nlohmann::json;

ParseError::ParseError(const std::string& message, std::size_t line)
    : std::runtime_error("line " + std::to_string(line) + ": " + message),
      line_number(line) {}

void SelectionRecord::normalize() {
  const std::size_t n = rewards.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rewards[a] > rewards[b]; });
  auto permute = [&](auto& seq) {
    if (!seq || seq->size() != n) return;
    auto src = *seq;
    for (std::size_t i = 0; i < n; ++i) (*seq)[i] = src[order[i]];
  };
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = rewards[order[i]];
  rewards = std::move(sorted);
  permute(answer_tags);
  permute(correctness);
}

std::string to_string(Scorer s) {
  switch (s) {
    case Scorer::perplexity: return "perplexity";
    case Scorer::prm: return "prm";
    case Scorer::synthetic: return "synthetic";
  }
  return "synthetic";
}

Scorer scorer_from_string(const std::string& s) {
  if (s == "perplexity") return Scorer::perplexity;
  if (s == "prm") return Scorer::prm;
  if (s == "synthetic") return Scorer::synthetic;
  throw std::invalid_argument("unknown scorer: " + s);
}

namespace {

std::string trimmed(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

bool parse_long(const std::string& s, long& out) {
  try {
    std::size_t used = 0;
    out = std::stol(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size() && std::isfinite(out);
  } catch (const std::exception&) {
    return false;
  }
}

// "key=value" extraction from a header segment such as "depth=2".
bool key_value(const std::string& segment, const std::string& key, std::string& value) {
  const auto pos = segment.find('=');
  if (pos == std::string::npos) return false;
  if (trimmed(segment.substr(0, pos)) != key) return false;
  value = trimmed(segment.substr(pos + 1));
  return true;
}

std::vector<double> parse_reward_list(const std::string& body, std::size_t line_no) {
  // Body is the inside of "[...]"; a trailing "..." marks truncation.
  std::vector<double> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trimmed(item);
    if (item.empty() || item == "...") continue;
    double v = 0.0;
    if (!parse_double(item, v)) throw ParseError("bad reward value '" + item + "'", line_no);
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::vector<SelectionRecord> parse_beam_select_text(const std::string& text) {
  constexpr const char* kHeader = "[BEAM_SELECT]";
  std::vector<SelectionRecord> records;
  SelectionRecord current;
  bool open = false;
  std::size_t header_line = 0;
  std::vector<double> header_rewards;  // from the top_rewards line
  std::vector<double> line_rewards;    // from #rank lines, full precision
  std::vector<bool> filled;
  std::vector<std::string> tags;
  bool any_tag = false;
  std::optional<int> selected;

  auto flush = [&] {
    if (!open) return;
    for (std::size_t i = 0; i < filled.size(); ++i)
      if (!filled[i])
        throw ParseError("candidate rank #" + std::to_string(i + 1) + " missing",
                         header_line);
    current.rewards = line_rewards.empty() ? header_rewards : line_rewards;
    if (current.rewards.size() > static_cast<std::size_t>(current.candidate_count))
      throw ParseError("more rewards than candidates", header_line);
    if (selected && *selected >= current.candidate_count)
      throw ParseError("selected rank exceeds candidate count", header_line);
    if (any_tag && !line_rewards.empty()) current.answer_tags = tags;
    current.selected_rank = selected;
    current.normalize();
    records.push_back(std::move(current));
    current = SelectionRecord{};
    header_rewards.clear();
    line_rewards.clear();
    filled.clear();
    tags.clear();
    any_tag = false;
    selected.reset();
    open = false;
  };

  std::stringstream stream(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    const std::string line = trimmed(raw);
    if (line.empty()) continue;

    if (line.rfind(kHeader, 0) == 0) {
      flush();
      // "[BEAM_SELECT] depth=<d> | candidates=<n>"
      std::string rest = trimmed(line.substr(std::string(kHeader).size()));
      const auto bar = rest.find('|');
      if (bar == std::string::npos) throw ParseError("malformed header", line_no);
      std::string depth_str, cand_str;
      if (!key_value(trimmed(rest.substr(0, bar)), "depth", depth_str) ||
          !key_value(trimmed(rest.substr(bar + 1)), "candidates", cand_str))
        throw ParseError("malformed header", line_no);
      long depth = 0, candidates = 0;
      if (!parse_long(depth_str, depth) || depth < 1)
        throw ParseError("bad depth '" + depth_str + "'", line_no);
      if (!parse_long(cand_str, candidates) || candidates < 1)
        throw ParseError("bad candidates '" + cand_str + "'", line_no);
      current.depth = static_cast<int>(depth);
      current.candidate_count = static_cast<int>(candidates);
      header_line = line_no;
      open = true;
      continue;
    }

    if (!open) throw ParseError("content before any [BEAM_SELECT] header", line_no);

    if (line.rfind("top_rewards=", 0) == 0) {
      const auto lb = line.find('[');
      const auto rb = line.rfind(']');
      if (lb == std::string::npos || rb == std::string::npos || rb < lb)
        throw ParseError("malformed top_rewards list", line_no);
      header_rewards = parse_reward_list(line.substr(lb + 1, rb - lb - 1), line_no);
      continue;
    }

    if (line[0] == '#') {
      // "#<rank>: reward=<r> [ANS:<tag>] <- SELECTED|REJECTED"
      const auto colon = line.find(':');
      if (colon == std::string::npos) throw ParseError("malformed candidate line", line_no);
      long rank1 = 0;
      if (!parse_long(trimmed(line.substr(1, colon - 1)), rank1) || rank1 < 1)
        throw ParseError("bad candidate rank", line_no);
      std::string rest = line.substr(colon + 1);

      const auto rpos = rest.find("reward=");
      if (rpos == std::string::npos) throw ParseError("candidate line lacks reward", line_no);
      std::string after = trimmed(rest.substr(rpos + 7));
      const auto rend = after.find_first_of(" \t[");
      const std::string reward_str = rend == std::string::npos ? after : after.substr(0, rend);
      double reward = 0.0;
      if (!parse_double(reward_str, reward))
        throw ParseError("bad reward '" + reward_str + "'", line_no);

      std::string tag;
      const auto tag_open = rest.find("[ANS:");
      if (tag_open != std::string::npos) {
        const auto tag_close = rest.find(']', tag_open);
        if (tag_close == std::string::npos) throw ParseError("unterminated answer tag", line_no);
        tag = trimmed(rest.substr(tag_open + 5, tag_close - tag_open - 5));
        any_tag = true;
      }

      const std::size_t slot = static_cast<std::size_t>(rank1 - 1);
      if (line_rewards.size() <= slot) {
        line_rewards.resize(slot + 1, 0.0);
        filled.resize(slot + 1, false);
        tags.resize(slot + 1);
      }
      line_rewards[slot] = reward;
      filled[slot] = true;
      tags[slot] = tag;
      if (rest.find("<- SELECTED") != std::string::npos) selected = static_cast<int>(slot);
      continue;
    }

    throw ParseError("unrecognized line '" + line + "'", line_no);
  }
  flush();
  return records;
}

namespace {

const std::set<std::string> kKnownFields = {"depth",         "candidates", "rewards",
                                            "selected_rank", "answer_tags", "correctness"};

SelectionRecord record_from_json(const json& j, std::size_t line_no) {
  if (!j.is_object()) throw ParseError("record is not a JSON object", line_no);
  SelectionRecord rec;
  try {
    if (!j.contains("depth")) throw ParseError("missing \"depth\"", line_no);
    if (!j.contains("candidates")) throw ParseError("missing \"candidates\"", line_no);
    if (!j.contains("rewards")) throw ParseError("missing \"rewards\"", line_no);
    rec.depth = j.at("depth").get<int>();
    rec.candidate_count = j.at("candidates").get<int>();
    rec.rewards = j.at("rewards").get<std::vector<double>>();
    if (j.contains("selected_rank") && !j.at("selected_rank").is_null())
      rec.selected_rank = j.at("selected_rank").get<int>();
    if (j.contains("answer_tags") && !j.at("answer_tags").is_null())
      rec.answer_tags = j.at("answer_tags").get<std::vector<std::string>>();
    if (j.contains("correctness") && !j.at("correctness").is_null())
      rec.correctness = j.at("correctness").get<std::vector<bool>>();
  } catch (const json::exception& e) {
    throw ParseError(e.what(), line_no);
  }
  if (rec.depth < 1) throw ParseError("depth must be >= 1", line_no);
  if (rec.candidate_count < 1) throw ParseError("candidates must be >= 1", line_no);
  if (rec.rewards.size() > static_cast<std::size_t>(rec.candidate_count))
    throw ParseError("more rewards than candidates", line_no);
  if (rec.selected_rank && (*rec.selected_rank < 0 || *rec.selected_rank >= rec.candidate_count))
    throw ParseError("selected_rank out of range", line_no);
  for (double r : rec.rewards)
    if (!std::isfinite(r)) throw ParseError("non-finite reward", line_no);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!kKnownFields.count(it.key())) rec.extra[it.key()] = it.value();
  rec.normalize();
  return rec;
}

json record_to_json(const SelectionRecord& rec) {
  json j;
  j["depth"] = rec.depth;
  j["candidates"] = rec.candidate_count;
  j["rewards"] = rec.rewards;
  if (rec.selected_rank) j["selected_rank"] = *rec.selected_rank;
  if (rec.answer_tags) j["answer_tags"] = *rec.answer_tags;
  if (rec.correctness) j["correctness"] = *rec.correctness;
  if (rec.extra.is_object())
    for (auto it = rec.extra.begin(); it != rec.extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

}  // namespace

std::vector<SelectionRecord> read_selection_jsonl(std::istream& source) {
  std::vector<SelectionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    const std::string body = trimmed(line);
    if (body.empty()) continue;
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
    records.push_back(record_from_json(j, line_no));
  }
  return records;
}

void write_selection_jsonl(const std::vector<SelectionRecord>& records, std::ostream& sink) {
  for (const auto& rec : records) sink << record_to_json(rec).dump() << '\n';
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trimmed(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

ResultsTable read_results_table(std::istream& source) {
  static const std::vector<std::string> kColumns = {
      "problem_id", "model_name", "scorer",  "beam_width",
      "seed",       "subject",    "correct", "final_reward"};

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(source, line)) throw ParseError("empty input, header row required", 1);
  ++line_no;
  const auto header = split_csv_line(trimmed(line));
  std::vector<int> index(kColumns.size(), -1);
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    for (std::size_t h = 0; h < header.size(); ++h)
      if (header[h] == kColumns[c]) index[c] = static_cast<int>(h);
    if (index[c] < 0) throw ParseError("missing required column '" + kColumns[c] + "'", 1);
  }

  ResultsTable table;
  std::set<std::tuple<std::string, int, std::int64_t>> seen;
  while (std::getline(source, line)) {
    ++line_no;
    const std::string body = trimmed(line);
    if (body.empty()) continue;
    const auto fields = split_csv_line(body);
    auto cell = [&](std::size_t c) -> const std::string& {
      static const std::string empty;
      const int h = index[c];
      if (h < 0 || static_cast<std::size_t>(h) >= fields.size()) return empty;
      return fields[static_cast<std::size_t>(h)];
    };
    auto fail = [&](std::size_t c) -> ParseError {
      return ParseError("unparseable cell in column '" + kColumns[c] + "'", line_no);
    };

    RunResult row;
    row.problem_id = cell(0);
    row.model_name = cell(1);
    try {
      row.scorer = scorer_from_string(cell(2));
    } catch (const std::invalid_argument&) {
      throw fail(2);
    }
    long k = 0;
    if (!parse_long(cell(3), k) || k < 1) throw fail(3);
    row.beam_width = static_cast<int>(k);
    long seed = 0;
    if (!parse_long(cell(4), seed)) throw fail(4);
    row.seed = seed;
    row.subject = cell(5);
    const std::string correct = cell(6);
    if (correct == "true" || correct == "1")
      row.correct = true;
    else if (correct == "false" || correct == "0")
      row.correct = false;
    else
      throw fail(6);
    if (!parse_double(cell(7), row.final_reward)) throw fail(7);

    if (!seen.insert({row.problem_id, row.beam_width, row.seed}).second)
      ++table.duplicate_warnings;
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_results_table(const std::vector<RunResult>& rows, std::ostream& sink) {
  sink << "problem_id,model_name,scorer,beam_width,seed,subject,correct,final_reward\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.final_reward);
    sink << r.problem_id << ',' << r.model_name << ',' << to_string(r.scorer) << ','
         << r.beam_width << ',' << r.seed << ',' << r.subject << ','
         << (r.correct ? "true" : "false") << ',' << buf << '\n';
  }
}

MacroSummary aggregate_macro(const std::vector<RunResult>& results) {
  if (results.empty()) throw std::invalid_argument("aggregate_macro: no results");

  // (model, scorer, k) -> (subject, seed) -> [successes, total]
  std::map<std::tuple<std::string, Scorer, int>,
           std::map<std::pair<std::string, std::int64_t>, std::pair<int, int>>>
      groups;
  for (const auto& r : results) {
    auto& cell = groups[{r.model_name, r.scorer, r.beam_width}][{r.subject, r.seed}];
    cell.first += r.correct ? 1 : 0;
    cell.second += 1;
  }

  MacroSummary summary;
  for (const auto& [key, cells] : groups) {
    std::vector<double> means;
    means.reserve(cells.size());
    for (const auto& [_, sc] : cells)
      means.push_back(100.0 * static_cast<double>(sc.first) / static_cast<double>(sc.second));
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) /
                        static_cast<double>(means.size());
    double se = 0.0;
    if (means.size() >= 2) {
      double ss = 0.0;
      for (double v : means) ss += (v - mean) * (v - mean);
      se = std::sqrt(ss / static_cast<double>(means.size() - 1) /
                     static_cast<double>(means.size()));
    } else {
      summary.warnings.push_back("single (subject, seed) cell for model '" +
                                 std::get<0>(key) + "', scorer '" +
                                 to_string(std::get<1>(key)) + "', k=" +
                                 std::to_string(std::get<2>(key)) +
                                 "; standard error reported as 0");
    }
    summary.cells[key] = {mean, se, static_cast<int>(means.size())};
  }

  // Deltas: mean(k_max) - mean(k=1) per (model, scorer).
  std::map<std::pair<std::string, Scorer>, std::pair<int, int>> k_span;  // min, max
  for (const auto& [key, _] : summary.cells) {
    const auto ms = std::make_pair(std::get<0>(key), std::get<1>(key));
    const int k = std::get<2>(key);
    auto it = k_span.find(ms);
    if (it == k_span.end())
      k_span[ms] = {k, k};
    else {
      it->second.first = std::min(it->second.first, k);
      it->second.second = std::max(it->second.second, k);
    }
  }
  for (const auto& [ms, span] : k_span) {
    const auto base = summary.cells.find({ms.first, ms.second, 1});
    if (base == summary.cells.end()) {
      summary.warnings.push_back("no k=1 runs for model '" + ms.first + "', scorer '" +
                                 to_string(ms.second) + "'; delta omitted");
      continue;
    }
    const auto top = summary.cells.find({ms.first, ms.second, span.second});
    summary.deltas[ms] = top->second.mean_percent - base->second.mean_percent;
  }
  return summary;
}

}  // namespace beamcal

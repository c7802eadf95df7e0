#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "reuselab/error.hpp"
#include "reuselab/io.hpp"
#include "reuselab/table.hpp"

namespace reuselab::drift {

struct Choice {
  enum class Kind : std::uint8_t { Letter, ParseFail, OpenEnded };
  Kind kind = Kind::ParseFail;
  char letter = 0;  // 'A'..'F' when kind == Letter

  static Choice of(char letter) { return Choice{Kind::Letter, letter}; }
  static Choice parse_fail() { return Choice{Kind::ParseFail, 0}; }
  static Choice open_ended() { return Choice{Kind::OpenEnded, 0}; }

  bool is_letter() const noexcept { return kind == Kind::Letter; }
  bool is_parse_fail() const noexcept { return kind == Kind::ParseFail; }

  std::string to_string() const {
    switch (kind) {
      case Kind::Letter: return std::string(1, letter);
      case Kind::ParseFail: return "parse_fail";
      case Kind::OpenEnded: return "open";
    }
    return "?";
  }

  static Choice from_string(const std::string& s) {
    if (s == "parse_fail") return parse_fail();
    if (s == "open") return open_ended();
    if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'F') return of(s[0]);
    throw Error(ErrorCode::Schema, "unknown choice value '" + s + "'");
  }

  bool operator==(const Choice&) const = default;
};

// Collects every standalone option letter (not adjacent to another letter or
// digit) in the response, case-insensitively. Exactly one distinct letter
// parses; none or conflicting letters is a parse failure.
inline Choice parse_choice(std::string_view raw, int n_options) {
  if (n_options < 2 || n_options > 6) throw Error(ErrorCode::Domain, "n_options must be in 2..6");
  auto is_word = [](unsigned char c) { return c < 0x80 && (std::isalnum(c) || c == '_'); };
  const char last = static_cast<char>('A' + n_options - 1);
  std::optional<char> found;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto c = static_cast<unsigned char>(raw[i]);
    if (c >= 0x80 || !std::isalpha(c)) continue;
    const char upper = static_cast<char>(std::toupper(c));
    if (upper < 'A' || upper > last) continue;
    const bool left_ok = i == 0 || !is_word(static_cast<unsigned char>(raw[i - 1]));
    const bool right_ok = i + 1 == raw.size() || !is_word(static_cast<unsigned char>(raw[i + 1]));
    if (!left_ok || !right_ok) continue;
    if (found && *found != upper) return Choice::parse_fail();
    found = upper;
  }
  return found ? Choice::of(*found) : Choice::parse_fail();
}

struct AttractorSet {
  enum class Mode { Prefix, Exact };
  std::vector<std::string> strings;
  Mode mode = Mode::Prefix;

  // Attractors observed in the unrepaired basin: "addCriterion..." and the
  // four-codepoint U+81EA U+52A8 U+751F U+6210 ("auto-generated").
  static AttractorSet defaults() {
    return AttractorSet{{"addCriterion", "\xE8\x87\xAA\xE5\x8A\xA8\xE7\x94\x9F\xE6\x88\x90"}, Mode::Prefix};
  }

  void validate() const {
    if (strings.empty()) throw Error(ErrorCode::Config, "attractor set is empty");
    for (const auto& s : strings) {
      if (s.empty()) throw Error(ErrorCode::Config, "attractor strings must be non-empty");
    }
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

inline bool is_pathological(std::string_view raw, const AttractorSet& attractors) {
  attractors.validate();
  const auto text = detail::trim(raw);
  return std::any_of(attractors.strings.begin(), attractors.strings.end(), [&](const std::string& a) {
    return attractors.mode == AttractorSet::Mode::Prefix ? text.starts_with(a) : text == a;
  });
}

struct Answer {
  std::string raw_text;
  Choice choice;
  std::optional<bool> correct;  // absent for open-ended rows
};

struct PairedRow {
  std::string item_id;
  std::size_t turn = 0;
  Answer baseline;
  Answer candidate;
};

// Parsed choices differ. Two parse failures are a matched failure, not a diff.
inline bool is_choice_diff(const Choice& a, const Choice& b) {
  if (a.is_parse_fail() && b.is_parse_fail()) return false;
  return !(a == b);
}

struct SplitCounts {
  std::size_t rows = 0;
  std::size_t choice_diffs = 0;
  std::size_t correctness_diffs = 0;
};

struct DriftReport {
  std::size_t n_rows = 0;
  std::size_t choice_diffs = 0;
  std::size_t correctness_diffs = 0;
  std::size_t text_diffs = 0;
  std::size_t parse_failures_baseline = 0;
  std::size_t parse_failures_candidate = 0;
  std::size_t matched_parse_failures = 0;
  std::size_t pathological_baseline = 0;
  std::size_t pathological_candidate = 0;
  std::size_t split_turn = 0;  // early: turn < split_turn
  SplitCounts early;
  SplitCounts late;
  double drift_rate = 0.0;  // choice_diffs / n_rows
  double gate = 0.03;
  bool gate_pass = true;
  std::optional<double> rule_of_three_bound;  // only when no choice drift was observed
  std::size_t sessions = 0;
  std::size_t sessions_with_drift = 0;
  std::set<std::string> drifted_items;  // items with any choice or correctness drift
};

// Upper ~95% bound on an event rate after zero events in n trials.
inline double rule_of_three(std::size_t n) {
  if (n < 1) throw Error(ErrorCode::Domain, "rule of three needs n >= 1");
  return std::min(1.0, 3.0 / static_cast<double>(n));
}

inline double jaccard_drift_overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline DriftReport drift_report(const std::vector<PairedRow>& rows, double gate = 0.03,
                                const AttractorSet& attractors = AttractorSet::defaults(),
                                std::optional<std::size_t> split_turn = std::nullopt) {
  if (rows.empty()) throw Error(ErrorCode::Domain, "drift report needs at least one paired row");
  if (!(gate > 0.0 && gate <= 1.0)) throw Error(ErrorCode::Config, "gate must lie in (0, 1]");
  DriftReport rep;
  rep.n_rows = rows.size();
  rep.gate = gate;
  std::size_t max_turn = 0;
  for (const auto& r : rows) max_turn = std::max(max_turn, r.turn);
  rep.split_turn = split_turn.value_or((max_turn + 1) / 2);

  std::set<std::string> items;
  for (const auto& r : rows) {
    items.insert(r.item_id);
    const bool choice = is_choice_diff(r.baseline.choice, r.candidate.choice);
    const bool correct = r.baseline.correct != r.candidate.correct;
    rep.choice_diffs += choice;
    rep.correctness_diffs += correct;
    rep.text_diffs += r.baseline.raw_text != r.candidate.raw_text;
    rep.parse_failures_baseline += r.baseline.choice.is_parse_fail();
    rep.parse_failures_candidate += r.candidate.choice.is_parse_fail();
    rep.matched_parse_failures += r.baseline.choice.is_parse_fail() && r.candidate.choice.is_parse_fail();
    rep.pathological_baseline += is_pathological(r.baseline.raw_text, attractors);
    rep.pathological_candidate += is_pathological(r.candidate.raw_text, attractors);
    auto& split = r.turn < rep.split_turn ? rep.early : rep.late;
    ++split.rows;
    split.choice_diffs += choice;
    split.correctness_diffs += correct;
    if (choice || correct) rep.drifted_items.insert(r.item_id);
  }
  rep.sessions = items.size();
  rep.sessions_with_drift = rep.drifted_items.size();
  rep.drift_rate = static_cast<double>(rep.choice_diffs) / static_cast<double>(rep.n_rows);
  rep.gate_pass = rep.drift_rate <= gate;
  if (rep.choice_diffs == 0) rep.rule_of_three_bound = rule_of_three(rep.n_rows);
  return rep;
}

struct CacheCorrectness {
  std::size_t n_rows = 0;
  std::size_t text_identical = 0;
  std::size_t choice_diffs = 0;
  std::size_t correctness_diffs = 0;
  std::size_t matched_parse_failures = 0;
  std::size_t parse_failures_baseline = 0;
  std::size_t parse_failures_candidate = 0;
};

// Byte-exact text comparison plus the standard paired counts.
inline CacheCorrectness cache_correctness_diff(const std::vector<PairedRow>& rows) {
  CacheCorrectness out;
  out.n_rows = rows.size();
  for (const auto& r : rows) {
    out.text_identical += r.baseline.raw_text == r.candidate.raw_text;
    out.choice_diffs += is_choice_diff(r.baseline.choice, r.candidate.choice);
    out.correctness_diffs += r.baseline.correct != r.candidate.correct;
    out.parse_failures_baseline += r.baseline.choice.is_parse_fail();
    out.parse_failures_candidate += r.candidate.choice.is_parse_fail();
    out.matched_parse_failures += r.baseline.choice.is_parse_fail() && r.candidate.choice.is_parse_fail();
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline AttractorSet attractors_from_json(const Json& j) {
  AttractorSet set;
  if (j.is_array()) {
    set.strings = j.get<std::vector<std::string>>();
  } else {
    set.strings = require<std::vector<std::string>>(j, "strings", "attractors");
    const auto mode = optional_field<std::string>(j, "mode", "prefix", "attractors");
    if (mode == "prefix") {
      set.mode = AttractorSet::Mode::Prefix;
    } else if (mode == "exact") {
      set.mode = AttractorSet::Mode::Exact;
    } else {
      throw Error(ErrorCode::Schema, "attractors.mode must be prefix|exact");
    }
  }
  set.validate();
  return set;
}

inline Json answer_to_json(const Answer& a) {
  return Json{{"raw_text", a.raw_text}, {"choice", a.choice.to_string()},
              {"correct", a.correct ? Json(*a.correct) : Json()}};
}

inline Answer answer_from_json(const Json& j, const std::string& where) {
  Answer a;
  a.raw_text = require<std::string>(j, "raw_text", where);
  a.choice = Choice::from_string(require<std::string>(j, "choice", where));
  if (j.contains("correct") && !j.at("correct").is_null()) a.correct = require<bool>(j, "correct", where);
  return a;
}

inline PairedRow paired_row_from_json(const Json& j) {
  const std::string where = "paired row";
  return PairedRow{require<std::string>(j, "item_id", where), optional_field<std::size_t>(j, "turn", 0, where),
                   answer_from_json(j.at("baseline"), where + ".baseline"),
                   answer_from_json(j.at("candidate"), where + ".candidate")};
}

inline Json paired_row_to_json(const PairedRow& r) {
  return Json{{"item_id", r.item_id}, {"turn", r.turn}, {"baseline", answer_to_json(r.baseline)},
              {"candidate", answer_to_json(r.candidate)}};
}

inline Json split_to_json(const SplitCounts& s) {
  return Json{{"rows", s.rows}, {"choice_diffs", s.choice_diffs}, {"correctness_diffs", s.correctness_diffs}};
}

inline Json report_to_json(const DriftReport& r) {
  return Json{{"n_rows", r.n_rows},
              {"choice_diffs", r.choice_diffs},
              {"correctness_diffs", r.correctness_diffs},
              {"text_diffs", r.text_diffs},
              {"parse_failures", Json{{"baseline", r.parse_failures_baseline},
                                      {"candidate", r.parse_failures_candidate},
                                      {"matched", r.matched_parse_failures}}},
              {"pathological", Json{{"baseline", r.pathological_baseline}, {"candidate", r.pathological_candidate}}},
              {"split_turn", r.split_turn},
              {"early", split_to_json(r.early)},
              {"late", split_to_json(r.late)},
              {"drift_rate", r.drift_rate},
              {"gate", r.gate},
              {"gate_pass", r.gate_pass},
              {"rule_of_three_bound", r.rule_of_three_bound ? Json(*r.rule_of_three_bound) : Json()},
              {"sessions", r.sessions},
              {"sessions_with_drift", r.sessions_with_drift},
              {"drifted_items", r.drifted_items}};
}

inline std::string ratio(std::size_t num, std::size_t den) { return std::to_string(num) + "/" + std::to_string(den); }

inline Table report_table(const DriftReport& r) {
  Table t;
  t.headers = {"Metric", "Value"};
  t.rows = {
      {"Choice drift", ratio(r.choice_diffs, r.n_rows) + " (" + fixed(100.0 * r.drift_rate, 2) + "%)"},
      {"Correct drift", ratio(r.correctness_diffs, r.n_rows)},
      {"Text diffs", ratio(r.text_diffs, r.n_rows)},
      {"Parse failures (baseline / candidate / matched)",
       std::to_string(r.parse_failures_baseline) + " / " + std::to_string(r.parse_failures_candidate) + " / " +
           std::to_string(r.matched_parse_failures)},
      {"Pathological (baseline / candidate)",
       std::to_string(r.pathological_baseline) + " / " + std::to_string(r.pathological_candidate)},
      {"Early choice drift (turn < " + std::to_string(r.split_turn) + ")", ratio(r.early.choice_diffs, r.early.rows)},
      {"Late choice drift", ratio(r.late.choice_diffs, r.late.rows)},
      {"Sessions with drift", ratio(r.sessions_with_drift, r.sessions)},
      {"Gate " + fixed(100.0 * r.gate, 1) + "%", r.gate_pass ? "pass" : "fail"},
      {"Rule-of-three bound", r.rule_of_three_bound ? fixed(*r.rule_of_three_bound, 4) : "-"},
  };
  return t;
}

inline Json cache_correctness_to_json(const CacheCorrectness& c) {
  return Json{{"n_rows", c.n_rows},
              {"text_identical", c.text_identical},
              {"choice_diffs", c.choice_diffs},
              {"correctness_diffs", c.correctness_diffs},
              {"parse_failures", Json{{"baseline", c.parse_failures_baseline},
                                      {"candidate", c.parse_failures_candidate},
                                      {"matched", c.matched_parse_failures}}}};
}

}  // namespace reuselab::drift

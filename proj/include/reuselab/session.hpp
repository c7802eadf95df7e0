#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "reuselab/drift.hpp"
#include "reuselab/error.hpp"
#include "reuselab/io.hpp"
#include "reuselab/rng.hpp"

namespace reuselab::session {

// ---------------------------------------------------------------------------
// Schedules

struct TurnSpec {
  std::string question_id;
  int n_options = 4;  // 0 = open-ended
  char key = 'A';
  char dense = 'A';                       // option the cold dense model picks
  std::optional<std::string> dense_text;  // overrides the canonical dense response
  bool anchored = false;                  // prompt carries the previous dense answer

  bool open_ended() const noexcept { return n_options == 0; }
};

// Turn 0 is the cold first query; every later turn is a follow-up.
struct QuerySchedule {
  std::string video_id;
  std::size_t n_frames = 8;
  std::vector<TurnSpec> turns;

  void validate() const {
    if (video_id.empty()) throw Error(ErrorCode::InvalidSpec, "schedule needs a video_id");
    if (n_frames < 1) throw Error(ErrorCode::InvalidSpec, video_id + ": n_frames must be >= 1");
    if (turns.empty()) throw Error(ErrorCode::InvalidSpec, video_id + ": schedule needs at least one turn");
    for (std::size_t i = 0; i < turns.size(); ++i) {
      const auto& t = turns[i];
      if (t.open_ended()) continue;
      const char last = static_cast<char>('A' + t.n_options - 1);
      if (t.n_options < 2 || t.n_options > 6 || t.key < 'A' || t.key > last || t.dense < 'A' || t.dense > last) {
        throw Error(ErrorCode::InvalidSpec, video_id + ": turn " + std::to_string(i) + " has invalid options", i);
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Policies and cache state

struct Policy {
  enum class Kind { ColdDense, RawWarmReuse, FixedK, AdaptiveRepair, ScheduledRefresh, FailedAdaptive };
  Kind kind = Kind::ColdDense;
  std::size_t k = 1;       // FixedK: newest frames re-prefilled per follow-up
  std::size_t period = 1;  // ScheduledRefresh: re-repair every period-th follow-up

  static Policy cold() { return {Kind::ColdDense}; }
  static Policy raw() { return {Kind::RawWarmReuse}; }
  static Policy fixed_k(std::size_t k) { return {Kind::FixedK, k}; }
  static Policy adaptive() { return {Kind::AdaptiveRepair}; }
  static Policy scheduled_refresh(std::size_t period) {
    if (period < 1) throw Error(ErrorCode::Config, "refresh period must be >= 1");
    return {Kind::ScheduledRefresh, 1, period};
  }
  // Test fixture: repairs at the first follow-up, then falls back to the
  // original unrepaired cache for every later follow-up.
  static Policy failed_adaptive() { return {Kind::FailedAdaptive}; }

  std::string to_string() const {
    switch (kind) {
      case Kind::ColdDense: return "cold";
      case Kind::RawWarmReuse: return "raw";
      case Kind::FixedK: return "fixed-k:" + std::to_string(k);
      case Kind::AdaptiveRepair: return "adaptive";
      case Kind::ScheduledRefresh: return "refresh:" + std::to_string(period);
      case Kind::FailedAdaptive: return "failed-adaptive";
    }
    return "?";
  }

  bool operator==(const Policy&) const = default;
};

// Accepts cold | raw | adaptive | fixed-k:<k> | refresh:<p>. The
// failed-adaptive fixture is only accepted when `allow_fixture` is set.
inline Policy parse_policy(const std::string& text, bool allow_fixture = false) {
  auto number_after = [&](std::size_t prefix_len) -> std::size_t {
    const auto digits = text.substr(prefix_len);
    if (digits.empty() || digits.size() > 9 || digits.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorCode::Config, "bad policy parameter in '" + text + "'");
    }
    return std::stoul(digits);
  };
  if (text == "cold") return Policy::cold();
  if (text == "raw") return Policy::raw();
  if (text == "adaptive") return Policy::adaptive();
  if (text.starts_with("fixed-k:")) return Policy::fixed_k(number_after(8));
  if (text.starts_with("refresh:")) return Policy::scheduled_refresh(number_after(8));
  if (allow_fixture && text == "failed-adaptive") return Policy::failed_adaptive();
  throw Error(ErrorCode::Config, "unknown policy '" + text + "'");
}

enum class CacheSource { None, Fresh, RawReused, Repaired, Inherited };

inline const char* to_string(CacheSource s) {
  switch (s) {
    case CacheSource::None: return "none";
    case CacheSource::Fresh: return "fresh";
    case CacheSource::RawReused: return "raw_reused";
    case CacheSource::Repaired: return "repaired";
    case CacheSource::Inherited: return "inherited";
  }
  return "?";
}

inline CacheSource cache_source_from_string(const std::string& s) {
  for (auto c : {CacheSource::None, CacheSource::Fresh, CacheSource::RawReused, CacheSource::Repaired,
                 CacheSource::Inherited}) {
    if (s == to_string(c)) return c;
  }
  throw Error(ErrorCode::Schema, "unknown cache source '" + s + "'");
}

struct CacheState {
  CacheSource source = CacheSource::None;
  std::size_t depth = 0;        // prefill tokens represented
  std::size_t age_in_turns = 0;  // follow-ups since the last fresh prefill or repair
  bool basin = false;
};

// ---------------------------------------------------------------------------
// Latency and basin models

// Affine in tail tokens: a follow-up costs t_text plus c_tok for every tail
// token beyond the plain question; a K-frame tail adds tokens_per_frame * K.
struct LatencyModel {
  double t_cold = 80.0;
  double t_text = 0.675;
  double c_frame_tail = 5.975;  // seconds per re-prefilled frame
  std::size_t tokens_per_frame = 401;
  std::size_t question_tokens = 50;
  std::size_t prefix_overhead_tokens = 20;
  std::size_t anchor_tokens = 40;
  double jitter_sigma = 0.0;  // lognormal jitter on follow-up latencies

  double seconds_per_token() const { return c_frame_tail / static_cast<double>(tokens_per_frame); }

  // Fits (t_text, c_frame_tail) through two (tail tokens, latency) points.
  static LatencyModel calibrate(std::size_t tail_high, double latency_high, std::size_t tail_low, double latency_low) {
    return calibrate(tail_high, latency_high, tail_low, latency_low, LatencyModel());
  }
  static LatencyModel calibrate(std::size_t tail_high, double latency_high, std::size_t tail_low, double latency_low,
                                LatencyModel base) {
    if (tail_high <= tail_low || latency_high <= latency_low) {
      throw Error(ErrorCode::Config, "calibration points must increase in both tokens and latency");
    }
    const double per_token = (latency_high - latency_low) / static_cast<double>(tail_high - tail_low);
    base.t_text = latency_low - per_token * (static_cast<double>(tail_low) - static_cast<double>(base.question_tokens));
    base.c_frame_tail = per_token * static_cast<double>(base.tokens_per_frame);
    base.validate();
    return base;
  }

  void validate() const {
    if (!(t_cold > 0 && t_text > 0 && c_frame_tail > 0) || tokens_per_frame == 0 || question_tokens == 0) {
      throw Error(ErrorCode::Config, "latency parameters must be positive");
    }
    if (!(t_text < t_cold)) throw Error(ErrorCode::Config, "t_text must be below t_cold");
    if (jitter_sigma < 0) throw Error(ErrorCode::Config, "jitter_sigma must be >= 0");
  }

  std::size_t prefix_tokens(std::size_t n_frames) const { return n_frames * tokens_per_frame + prefix_overhead_tokens; }
  std::size_t tail_tokens(std::size_t k, bool anchored) const {
    return tokens_per_frame * k + question_tokens + (anchored ? anchor_tokens : 0);
  }
  double follow_up_seconds(std::size_t tail) const {
    return t_text + seconds_per_token() * (static_cast<double>(tail) - static_cast<double>(question_tokens));
  }
};

// Raw reuse of a prefix deeper than the threshold enters the cache basin.
struct BasinModel {
  bool enabled = true;
  std::size_t depth_threshold_tokens = 6500;
  drift::AttractorSet attractors = drift::AttractorSet::defaults();
  std::size_t repeat = 3;     // attractor repetitions in a pathological response
  bool stochastic = false;    // default: every basin turn is pathological
  double probability = 1.0;   // stochastic mode only

  void validate() const {
    if (!enabled) return;
    if (depth_threshold_tokens == 0 || repeat == 0) throw Error(ErrorCode::Config, "basin thresholds must be positive");
    attractors.validate();
    if (stochastic && !(probability >= 0 && probability <= 1)) throw Error(ErrorCode::Config, "basin probability must lie in [0, 1]");
  }
};

// ---------------------------------------------------------------------------
// Answer oracle

// Replaces the dense answer on matching turns. Unset filters match anything.
struct CorruptionRule {
  std::optional<std::string> video_id;
  std::optional<std::size_t> turn;
  std::optional<std::string> question_id;
  std::set<CacheSource> sources;  // empty = any non-fresh source
  std::optional<bool> anchored;
  std::optional<char> choice;
  std::optional<std::string> text;
  double probability = 1.0;
};

struct OracleConfig {
  std::vector<CorruptionRule> rules;
};

inline std::string dense_response(const TurnSpec& spec) {
  if (spec.dense_text) return *spec.dense_text;
  if (spec.open_ended()) return "Open answer for " + spec.question_id + ".";
  return std::string("Answer: ") + spec.dense + ".";
}

// Deterministic stand-in for the model: the cold dense response, unless a
// corruption rule fires for this cache state.
inline std::string oracle_answer(const OracleConfig& oracle, const QuerySchedule& schedule, std::size_t turn,
                                 CacheSource source, Rng& rng) {
  const auto& spec = schedule.turns[turn];
  if (source != CacheSource::Fresh) {
    for (const auto& rule : oracle.rules) {
      if (rule.video_id && *rule.video_id != schedule.video_id) continue;
      if (rule.turn && *rule.turn != turn) continue;
      if (rule.question_id && *rule.question_id != spec.question_id) continue;
      if (!rule.sources.empty() && !rule.sources.count(source)) continue;
      if (rule.anchored && *rule.anchored != spec.anchored) continue;
      if (rule.probability < 1.0 && !rng.bernoulli(rule.probability)) continue;
      if (rule.text) return *rule.text;
      if (rule.choice) return std::string("Answer: ") + *rule.choice + ".";
      return dense_response(spec) + " (revised)";
    }
  }
  return dense_response(spec);
}

// ---------------------------------------------------------------------------
// Session simulation

struct QueryRecord {
  std::string video_id;
  std::string question_id;
  std::size_t turn = 0;
  std::string policy;
  CacheSource cache_source = CacheSource::None;
  std::string raw_text;
  drift::Choice choice;
  std::optional<bool> correct;
  double latency_s = 0.0;
  std::size_t tail_tokens = 0;
  double prefix_coverage = 0.0;
  bool basin = false;
  bool anchored = false;
};

struct SessionLog {
  std::string video_id;
  std::string policy;
  std::vector<QueryRecord> records;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline drift::Choice parse_for(const TurnSpec& spec, const std::string& raw) {
  return spec.open_ended() ? drift::Choice::open_ended() : drift::parse_choice(raw, spec.n_options);
}

}  // namespace detail

// Cache state a follow-up runs from, before the answer is produced.
inline CacheSource follow_up_source(const Policy& policy, std::size_t turn) {
  using K = Policy::Kind;
  switch (policy.kind) {
    case K::ColdDense: return CacheSource::Fresh;
    case K::RawWarmReuse: return CacheSource::RawReused;
    case K::FixedK: return policy.k == 0 ? CacheSource::RawReused : CacheSource::Repaired;
    case K::AdaptiveRepair: return turn == 1 ? CacheSource::Repaired : CacheSource::Inherited;
    case K::ScheduledRefresh:
      return (turn == 1 || turn % policy.period == 0) ? CacheSource::Repaired : CacheSource::Inherited;
    case K::FailedAdaptive: return turn == 1 ? CacheSource::Repaired : CacheSource::RawReused;
  }
  return CacheSource::Fresh;
}

// Per-session randomness is keyed on (seed, video_id), so a session's log
// does not depend on which other sessions run or in what order.
inline SessionLog run_session(const QuerySchedule& schedule, const Policy& policy, const OracleConfig& oracle,
                              const LatencyModel& latency, const BasinModel& basin, std::uint64_t seed) {
  schedule.validate();
  latency.validate();
  basin.validate();
  if (policy.kind == Policy::Kind::ScheduledRefresh && policy.period < 1) {
    throw Error(ErrorCode::Config, "refresh period must be >= 1");
  }
  Rng rng(derive_seed(seed, detail::fnv1a(schedule.video_id)));
  const std::size_t prefix = latency.prefix_tokens(schedule.n_frames);

  SessionLog log{schedule.video_id, policy.to_string(), {}};
  CacheState state;
  for (std::size_t turn = 0; turn < schedule.turns.size(); ++turn) {
    const auto& spec = schedule.turns[turn];
    QueryRecord rec;
    rec.video_id = schedule.video_id;
    rec.question_id = spec.question_id;
    rec.turn = turn;
    rec.policy = log.policy;
    rec.anchored = spec.anchored;

    const CacheSource source = turn == 0 ? CacheSource::Fresh : follow_up_source(policy, turn);
    std::size_t reused = 0;
    if (source == CacheSource::Fresh) {
      rec.tail_tokens = prefix + latency.tail_tokens(0, spec.anchored);
      rec.latency_s = latency.t_cold;
      state = CacheState{CacheSource::Fresh, prefix, 0, false};
    } else {
      const std::size_t k = source == CacheSource::Repaired ? std::min(policy.k, schedule.n_frames) : 0;
      rec.tail_tokens = latency.tail_tokens(k, spec.anchored);
      reused = prefix - latency.tokens_per_frame * k;
      rec.latency_s = latency.follow_up_seconds(rec.tail_tokens);
      const bool in_basin = basin.enabled && source == CacheSource::RawReused && prefix > basin.depth_threshold_tokens;
      state = CacheState{source, prefix, source == CacheSource::Repaired ? 0 : state.age_in_turns + 1, in_basin};
    }
    if (turn > 0 && latency.jitter_sigma > 0) rec.latency_s *= std::exp(latency.jitter_sigma * rng.normal());
    rec.cache_source = source;
    rec.basin = state.basin;
    rec.prefix_coverage = static_cast<double>(reused) / static_cast<double>(reused + rec.tail_tokens);

    const bool pathological = state.basin && (!basin.stochastic || rng.bernoulli(basin.probability));
    if (pathological) {
      const auto& attractor = basin.attractors.strings[(turn - 1) % basin.attractors.strings.size()];
      for (std::size_t r = 0; r < basin.repeat; ++r) rec.raw_text += (r ? " " : "") + attractor;
    } else {
      rec.raw_text = oracle_answer(oracle, schedule, turn, source, rng);
    }
    rec.choice = detail::parse_for(spec, rec.raw_text);
    if (!spec.open_ended()) rec.correct = rec.choice == drift::Choice::of(spec.key);
    log.records.push_back(std::move(rec));
  }
  return log;
}

// ---------------------------------------------------------------------------
// Economics

inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::Domain, "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Same-class warm speedup: cold follow-up median / session follow-up median.
inline double warm_speedup(double cold_followup_median, double session_followup_median) {
  if (!(cold_followup_median > 0 && session_followup_median > 0)) throw Error(ErrorCode::Domain, "medians must be > 0");
  return cold_followup_median / session_followup_median;
}

// Setup-inclusive session speedup over Q same-video queries: one cold first
// query plus Q-1 warm follow-ups, against Q cold queries.
inline double session_speedup(std::size_t q, double t_cold_mean, double t_cold_first, double t_warm_mean) {
  if (q < 1) throw Error(ErrorCode::Domain, "Q must be >= 1");
  if (!(t_cold_mean > 0 && t_cold_first > 0 && t_warm_mean > 0)) throw Error(ErrorCode::Domain, "times must be > 0");
  const double qd = static_cast<double>(q);
  return qd * t_cold_mean / (t_cold_first + (qd - 1.0) * t_warm_mean);
}

// Table-style inputs: warm multiplier W and the printed Q=1 ratio, with the
// cold mean normalised to 1.
inline double session_speedup_from_ratios(std::size_t q, double warm_multiplier, double q1_ratio) {
  if (!(warm_multiplier > 0 && q1_ratio > 0)) throw Error(ErrorCode::Domain, "ratios must be > 0");
  return session_speedup(q, 1.0, 1.0 / q1_ratio, 1.0 / warm_multiplier);
}

inline double prompt_frame_throughput(std::size_t n_frames, double warm_latency_s) {
  if (n_frames == 0 || !(warm_latency_s > 0)) throw Error(ErrorCode::Domain, "frames and latency must be > 0");
  return static_cast<double>(n_frames) / warm_latency_s;
}

// ---------------------------------------------------------------------------
// Cohorts

struct TurnSplit {
  std::size_t turn = 0;
  std::size_t count = 0;
  double median_latency_s = 0.0;
  double median_tail_tokens = 0.0;
};

struct CohortSummary {
  std::size_t sessions = 0;
  std::size_t queries = 0;
  std::size_t follow_ups = 0;
  std::optional<double> median_first_latency_s;
  std::optional<double> median_followup_latency_s;
  std::vector<TurnSplit> per_turn;
};

struct Cohort {
  std::vector<SessionLog> logs;
  CohortSummary summary;
};

inline CohortSummary summarize(const std::vector<SessionLog>& logs) {
  CohortSummary s;
  s.sessions = logs.size();
  std::vector<double> first;
  std::vector<double> follow;
  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> by_turn;
  for (const auto& log : logs) {
    for (const auto& r : log.records) {
      ++s.queries;
      (r.turn == 0 ? first : follow).push_back(r.latency_s);
      by_turn[r.turn].first.push_back(r.latency_s);
      by_turn[r.turn].second.push_back(static_cast<double>(r.tail_tokens));
    }
  }
  s.follow_ups = follow.size();
  if (!first.empty()) s.median_first_latency_s = median(first);
  if (!follow.empty()) s.median_followup_latency_s = median(follow);
  for (const auto& [turn, samples] : by_turn) {
    s.per_turn.push_back(TurnSplit{turn, samples.first.size(), median(samples.first), median(samples.second)});
  }
  return s;
}

inline Cohort run_cohort(const std::vector<QuerySchedule>& schedules, const Policy& policy, const OracleConfig& oracle,
                         const LatencyModel& latency, const BasinModel& basin, std::uint64_t seed) {
  Cohort cohort;
  std::set<std::string> seen;
  for (const auto& schedule : schedules) {
    if (!seen.insert(schedule.video_id).second) {
      throw Error(ErrorCode::InvalidSpec, "duplicate video_id '" + schedule.video_id + "' in cohort");
    }
    cohort.logs.push_back(run_session(schedule, policy, oracle, latency, basin, seed));
  }
  cohort.summary = summarize(cohort.logs);
  return cohort;
}

namespace detail {

inline std::map<std::pair<std::string, std::size_t>, const QueryRecord*> index_records(const std::vector<SessionLog>& logs) {
  std::map<std::pair<std::string, std::size_t>, const QueryRecord*> out;
  for (const auto& log : logs) {
    for (const auto& r : log.records) {
      if (!out.emplace(std::make_pair(r.video_id, r.turn), &r).second) {
        throw Error(ErrorCode::Schema, "duplicate record for (" + r.video_id + ", turn " + std::to_string(r.turn) + ")");
      }
    }
  }
  return out;
}

}  // namespace detail

// Median over sessions of numerator/denominator latency at one turn,
// pairing sessions by video_id.
inline double paired_turn_speedup(const std::vector<SessionLog>& numerator, const std::vector<SessionLog>& denominator,
                                  std::size_t turn) {
  const auto den = detail::index_records(denominator);
  std::vector<double> ratios;
  for (const auto& log : numerator) {
    for (const auto& r : log.records) {
      if (r.turn != turn) continue;
      const auto it = den.find({r.video_id, turn});
      if (it == den.end()) throw Error(ErrorCode::Schema, "no paired record for " + r.video_id);
      ratios.push_back(r.latency_s / it->second->latency_s);
    }
  }
  return median(ratios);
}

inline double median_at_turn(const std::vector<SessionLog>& logs, std::size_t turn, double QueryRecord::*field) {
  std::vector<double> v;
  for (const auto& log : logs) {
    for (const auto& r : log.records) {
      if (r.turn == turn) v.push_back(r.*field);
    }
  }
  return median(v);
}

inline double median_tail_tokens_at_turn(const std::vector<SessionLog>& logs, std::size_t turn) {
  std::vector<double> v;
  for (const auto& log : logs) {
    for (const auto& r : log.records) {
      if (r.turn == turn) v.push_back(static_cast<double>(r.tail_tokens));
    }
  }
  return median(v);
}

inline drift::Answer answer_of(const QueryRecord& r) { return drift::Answer{r.raw_text, r.choice, r.correct}; }

// Joins two arms on (video_id, turn). Every key must be present on both sides.
inline std::vector<drift::PairedRow> pair_logs(const std::vector<SessionLog>& baseline,
                                               const std::vector<SessionLog>& candidate, bool followups_only = false) {
  const auto base = detail::index_records(baseline);
  const auto cand = detail::index_records(candidate);
  if (base.size() != cand.size()) {
    throw Error(ErrorCode::Schema, "arms have different record counts (" + std::to_string(base.size()) + " vs " +
                                       std::to_string(cand.size()) + ")");
  }
  std::vector<drift::PairedRow> rows;
  for (const auto& [key, b] : base) {
    const auto it = cand.find(key);
    if (it == cand.end()) {
      throw Error(ErrorCode::Schema, "candidate has no record for (" + key.first + ", turn " + std::to_string(key.second) + ")");
    }
    if (followups_only && key.second == 0) continue;
    rows.push_back(drift::PairedRow{key.first, key.second, answer_of(*b), answer_of(*it->second)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// JSON

inline Json record_to_json(const QueryRecord& r) {
  return Json{{"video_id", r.video_id},
              {"question_id", r.question_id},
              {"turn", r.turn},
              {"policy", r.policy},
              {"cache_source", to_string(r.cache_source)},
              {"raw_text", r.raw_text},
              {"choice", r.choice.to_string()},
              {"correct", r.correct ? Json(*r.correct) : Json()},
              {"latency_s", r.latency_s},
              {"tail_tokens", r.tail_tokens},
              {"prefix_coverage", r.prefix_coverage},
              {"basin", r.basin},
              {"anchored", r.anchored}};
}

inline QueryRecord record_from_json(const Json& j) {
  const std::string where = "session record";
  QueryRecord r;
  r.video_id = require<std::string>(j, "video_id", where);
  r.question_id = optional_field<std::string>(j, "question_id", "", where);
  r.turn = require<std::size_t>(j, "turn", where);
  r.policy = require<std::string>(j, "policy", where);
  r.cache_source = cache_source_from_string(require<std::string>(j, "cache_source", where));
  r.raw_text = require<std::string>(j, "raw_text", where);
  r.choice = drift::Choice::from_string(require<std::string>(j, "choice", where));
  if (j.contains("correct") && !j.at("correct").is_null()) r.correct = require<bool>(j, "correct", where);
  r.latency_s = require<double>(j, "latency_s", where);
  if (!(r.latency_s > 0)) throw Error(ErrorCode::Schema, where + ": latency_s must be > 0");
  r.tail_tokens = require<std::size_t>(j, "tail_tokens", where);
  r.prefix_coverage = require<double>(j, "prefix_coverage", where);
  r.basin = optional_field<bool>(j, "basin", false, where);
  r.anchored = optional_field<bool>(j, "anchored", false, where);
  return r;
}

inline std::vector<Json> logs_to_jsonl(const std::vector<SessionLog>& logs) {
  std::vector<Json> out;
  for (const auto& log : logs) {
    for (const auto& r : log.records) out.push_back(record_to_json(r));
  }
  return out;
}

// Regroups flat JSONL records into sessions; records tagged "type" (headers,
// summaries) are skipped.
inline std::vector<SessionLog> logs_from_jsonl(const std::vector<Json>& records) {
  std::vector<SessionLog> logs;
  std::map<std::string, std::size_t> index;
  for (const auto& j : records) {
    if (j.is_object() && j.contains("type")) continue;
    auto rec = record_from_json(j);
    auto [it, inserted] = index.emplace(rec.video_id, logs.size());
    if (inserted) logs.push_back(SessionLog{rec.video_id, rec.policy, {}});
    logs[it->second].records.push_back(std::move(rec));
  }
  for (auto& log : logs) {
    std::sort(log.records.begin(), log.records.end(), [](const auto& a, const auto& b) { return a.turn < b.turn; });
  }
  return logs;
}

inline TurnSpec turn_from_json(const Json& j, const std::string& where) {
  TurnSpec t;
  t.question_id = require<std::string>(j, "question_id", where);
  t.n_options = optional_field<int>(j, "n_options", 4, where);
  auto letter = [&](const char* key, char fallback) {
    const auto s = optional_field<std::string>(j, key, std::string(1, fallback), where);
    if (s.size() != 1) throw Error(ErrorCode::Schema, where + ": field '" + key + "' must be one letter");
    return s[0];
  };
  t.key = letter("key", 'A');
  t.dense = letter("dense", t.key);
  if (j.contains("dense_text") && !j.at("dense_text").is_null()) t.dense_text = require<std::string>(j, "dense_text", where);
  t.anchored = optional_field<bool>(j, "anchored", false, where);
  return t;
}

// Accepts an array of explicit schedules, or {"cycle": {...}} which cycles a
// question list over `horizon` turns for each listed video. In cycle form,
// `anchored_followups` marks every turn >= 1 as dense-answer anchored.
inline std::vector<QuerySchedule> schedules_from_json(const Json& j) {
  std::vector<QuerySchedule> out;
  if (j.is_array()) {
    for (const auto& s : j) {
      QuerySchedule q;
      q.video_id = require<std::string>(s, "video_id", "schedule");
      q.n_frames = require<std::size_t>(s, "n_frames", "schedule " + q.video_id);
      for (const auto& t : s.at("turns")) q.turns.push_back(turn_from_json(t, "schedule " + q.video_id));
      q.validate();
      out.push_back(std::move(q));
    }
    return out;
  }
  const std::string where = "schedule cycle";
  if (!j.is_object() || !j.contains("cycle")) throw Error(ErrorCode::Schema, "schedules must be an array or {\"cycle\": ...}");
  const auto& c = j.at("cycle");
  const auto horizon = require<std::size_t>(c, "horizon", where);
  const auto n_frames = require<std::size_t>(c, "n_frames", where);
  const bool anchored = optional_field<bool>(c, "anchored_followups", false, where);
  std::vector<TurnSpec> questions;
  for (const auto& t : c.value("questions", Json::array())) questions.push_back(turn_from_json(t, where));

  std::vector<Json> videos;
  const auto& v = c.at("videos");
  if (v.is_number_unsigned() || v.is_number_integer()) {
    const auto prefix = optional_field<std::string>(c, "video_prefix", "video", where);
    for (std::size_t i = 0; i < v.get<std::size_t>(); ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "%02zu", i + 1);
      videos.push_back(Json{{"video_id", prefix + id}});
    }
  } else {
    for (const auto& item : v) videos.push_back(item.is_string() ? Json{{"video_id", item}} : item);
  }
  for (const auto& video : videos) {
    QuerySchedule q;
    q.video_id = require<std::string>(video, "video_id", where);
    q.n_frames = optional_field<std::size_t>(video, "n_frames", n_frames, where);
    std::vector<TurnSpec> cycle = questions;
    if (video.contains("questions")) {
      cycle.clear();
      for (const auto& t : video.at("questions")) cycle.push_back(turn_from_json(t, where + " " + q.video_id));
    }
    if (cycle.empty()) throw Error(ErrorCode::Schema, where + ": no questions for " + q.video_id);
    for (std::size_t t = 0; t < horizon; ++t) {
      TurnSpec spec = cycle[t % cycle.size()];
      if (anchored && t >= 1) spec.anchored = true;
      q.turns.push_back(std::move(spec));
    }
    q.validate();
    out.push_back(std::move(q));
  }
  return out;
}

inline LatencyModel latency_from_json(const Json& j) {
  const std::string where = "latency";
  LatencyModel m;
  m.t_cold = optional_field<double>(j, "t_cold", m.t_cold, where);
  m.tokens_per_frame = optional_field<std::size_t>(j, "tokens_per_frame", m.tokens_per_frame, where);
  m.question_tokens = optional_field<std::size_t>(j, "question_tokens", m.question_tokens, where);
  m.prefix_overhead_tokens = optional_field<std::size_t>(j, "prefix_overhead_tokens", m.prefix_overhead_tokens, where);
  m.anchor_tokens = optional_field<std::size_t>(j, "anchor_tokens", m.anchor_tokens, where);
  m.jitter_sigma = optional_field<double>(j, "jitter_sigma", m.jitter_sigma, where);
  if (j.contains("calibrate")) {
    const auto& c = j.at("calibrate");
    return LatencyModel::calibrate(require<std::size_t>(c, "tail_tokens_high", where), require<double>(c, "latency_high", where),
                                   require<std::size_t>(c, "tail_tokens_low", where), require<double>(c, "latency_low", where), m);
  }
  m.t_text = optional_field<double>(j, "t_text", m.t_text, where);
  m.c_frame_tail = optional_field<double>(j, "c_frame_tail", m.c_frame_tail, where);
  m.validate();
  return m;
}

inline Json latency_to_json(const LatencyModel& m) {
  return Json{{"t_cold", m.t_cold},
              {"t_text", m.t_text},
              {"c_frame_tail", m.c_frame_tail},
              {"tokens_per_frame", m.tokens_per_frame},
              {"question_tokens", m.question_tokens},
              {"prefix_overhead_tokens", m.prefix_overhead_tokens},
              {"anchor_tokens", m.anchor_tokens},
              {"jitter_sigma", m.jitter_sigma}};
}

inline BasinModel basin_from_json(const Json& j) {
  const std::string where = "basin";
  BasinModel b;
  b.enabled = optional_field<bool>(j, "enabled", b.enabled, where);
  b.depth_threshold_tokens = optional_field<std::size_t>(j, "depth_threshold_tokens", b.depth_threshold_tokens, where);
  b.repeat = optional_field<std::size_t>(j, "repeat", b.repeat, where);
  b.stochastic = optional_field<bool>(j, "stochastic", b.stochastic, where);
  b.probability = optional_field<double>(j, "probability", b.probability, where);
  if (j.contains("attractors")) b.attractors = drift::attractors_from_json(j.at("attractors"));
  b.validate();
  return b;
}

inline Json basin_to_json(const BasinModel& b) {
  return Json{{"enabled", b.enabled},
              {"depth_threshold_tokens", b.depth_threshold_tokens},
              {"repeat", b.repeat},
              {"stochastic", b.stochastic},
              {"probability", b.probability},
              {"attractors", Json{{"mode", b.attractors.mode == drift::AttractorSet::Mode::Prefix ? "prefix" : "exact"},
                                  {"strings", b.attractors.strings}}}};
}

inline OracleConfig oracle_from_json(const Json& j) {
  const std::string where = "oracle rule";
  OracleConfig o;
  for (const auto& r : j.value("rules", Json::array())) {
    CorruptionRule rule;
    if (r.contains("video_id")) rule.video_id = require<std::string>(r, "video_id", where);
    if (r.contains("turn")) rule.turn = require<std::size_t>(r, "turn", where);
    if (r.contains("question_id")) rule.question_id = require<std::string>(r, "question_id", where);
    for (const auto& s : r.value("sources", Json::array())) rule.sources.insert(cache_source_from_string(s.get<std::string>()));
    if (r.contains("anchored")) rule.anchored = require<bool>(r, "anchored", where);
    if (r.contains("choice")) {
      const auto c = require<std::string>(r, "choice", where);
      if (c.size() != 1) throw Error(ErrorCode::Schema, where + ": choice must be one letter");
      rule.choice = c[0];
    }
    if (r.contains("text")) rule.text = require<std::string>(r, "text", where);
    rule.probability = optional_field<double>(r, "probability", 1.0, where);
    o.rules.push_back(std::move(rule));
  }
  return o;
}

inline Json oracle_to_json(const OracleConfig& o) {
  Json rules = Json::array();
  for (const auto& r : o.rules) {
    Json j = Json::object();
    if (r.video_id) j["video_id"] = *r.video_id;
    if (r.turn) j["turn"] = *r.turn;
    if (r.question_id) j["question_id"] = *r.question_id;
    if (!r.sources.empty()) {
      j["sources"] = Json::array();
      for (auto s : r.sources) j["sources"].push_back(to_string(s));
    }
    if (r.anchored) j["anchored"] = *r.anchored;
    if (r.choice) j["choice"] = std::string(1, *r.choice);
    if (r.text) j["text"] = *r.text;
    j["probability"] = r.probability;
    rules.push_back(std::move(j));
  }
  return Json{{"rules", rules}};
}

}  // namespace reuselab::session

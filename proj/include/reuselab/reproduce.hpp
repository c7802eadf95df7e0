#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "reuselab/baselines.hpp"
#include "reuselab/ceiling.hpp"
#include "reuselab/drift.hpp"
#include "reuselab/io.hpp"
#include "reuselab/session.hpp"
#include "reuselab/table.hpp"

#ifndef REUSELAB_DEFAULT_FIXTURE_DIR
#define REUSELAB_DEFAULT_FIXTURE_DIR "fixtures"
#endif

namespace reuselab::reproduce {

// REUSELAB_FIXTURE_DIR overrides the bundled fixture directory.
inline std::filesystem::path fixture_dir() {
  if (const char* env = std::getenv("REUSELAB_FIXTURE_DIR"); env && *env) return env;
  return REUSELAB_DEFAULT_FIXTURE_DIR;
}

struct Check {
  std::string subject;
  std::string metric;
  double expected = 0.0;
  double actual = 0.0;
  double tolerance = 0.0;
  bool at_least = false;  // pass iff actual >= expected, tolerance unused
  bool pass = false;
};

struct Result {
  std::string title;
  std::vector<Check> checks;

  bool all_pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& c : checks) n += !c.pass;
    return n;
  }

  void add(std::string subject, std::string metric, double expected, double actual, double tolerance) {
    // 1e-9 absorbs binary representation error in decimal fixture values.
    const bool pass = std::abs(actual - expected) <= tolerance + 1e-9;
    checks.push_back(Check{std::move(subject), std::move(metric), expected, actual, tolerance, false, pass});
  }

  void add_at_least(std::string subject, std::string metric, double minimum, double actual) {
    checks.push_back(Check{std::move(subject), std::move(metric), minimum, actual, 0.0, true, actual >= minimum});
  }
};

inline Table to_table(const Result& r) {
  Table t;
  t.headers = {"Subject", "Metric", "Expected", "Actual", "Tolerance", "Status"};
  for (const auto& c : r.checks) {
    t.rows.push_back({c.subject, c.metric, (c.at_least ? ">= " : "") + fixed(c.expected, 4), fixed(c.actual, 4),
                      c.at_least ? "-" : fixed(c.tolerance, 4), c.pass ? "ok" : "MISMATCH"});
  }
  return t;
}

inline double round_to(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(value * scale) / scale;
}

// Predictions are compared at the printed three-decimal precision; residuals
// use the unrounded prediction.
inline Result reproduce_ceiling(const std::filesystem::path& dir = fixture_dir(), double pred_tol = 0.001,
                                double resid_tol_pp = 0.15) {
  Result result{"ceiling", {}};
  for (const auto* file : {"ceiling_cells.json", "ceiling_measured_sparse.json"}) {
    const auto doc = read_json_file(dir / file);
    for (const auto& item : doc.at("cells")) {
      const auto cell = ceiling::cell_from_json(item);
      const double pred = ceiling::predict(cell);
      const auto& printed = item.at("printed");
      const auto& name = ceiling::cell_name(cell);
      result.add(name, "predicted", printed.at("predicted").get<double>(), round_to(pred, 3), pred_tol);
      result.add(name, "residual_pp", printed.at("residual_pp").get<double>(),
                 ceiling::residual_pp(item.at("observed").get<double>(), pred), resid_tol_pp);
    }
  }
  return result;
}

inline Result reproduce_economics(const std::filesystem::path& dir = fixture_dir()) {
  Result result{"economics", {}};
  const auto doc = read_json_file(dir / "economics_cells.json");
  const double tol = doc.value("tolerance", 0.1);
  for (const auto& cell : doc.at("cells")) {
    const auto name = cell.at("name").get<std::string>();
    const double warm = cell.at("warm").get<double>();
    const double q1 = cell.at("q1").get<double>();
    for (const auto& [q, printed] : cell.at("printed").items()) {
      const auto qn = static_cast<std::size_t>(std::stoul(q));
      result.add(name, "Q=" + q, printed.get<double>(), session::session_speedup_from_ratios(qn, warm, q1), tol);
    }
  }
  return result;
}

struct CohortRun {
  std::string name;
  std::vector<session::SessionLog> baseline;
  std::vector<session::SessionLog> candidate;
  drift::DriftReport report;
};

inline std::vector<CohortRun> run_drift_cohorts(const std::filesystem::path& dir = fixture_dir()) {
  const auto doc = read_json_file(dir / "drift_cohorts.json");
  const auto latency = session::latency_from_json(doc.at("latency"));
  const auto basin = session::basin_from_json(doc.at("basin"));
  const auto seed = doc.value("seed", std::uint64_t{0});
  std::vector<CohortRun> runs;
  for (const auto& c : doc.at("cohorts")) {
    const auto schedules = session::schedules_from_json(c.at("schedules"));
    const auto oracle = session::oracle_from_json(c.value("oracle", Json::object()));
    const auto base_policy = session::parse_policy(c.value("baseline_policy", std::string("cold")), true);
    const auto policy = session::parse_policy(c.at("policy").get<std::string>(), true);
    CohortRun run;
    run.name = c.at("name").get<std::string>();
    run.baseline = session::run_cohort(schedules, base_policy, oracle, latency, basin, seed).logs;
    run.candidate = session::run_cohort(schedules, policy, oracle, latency, basin, seed).logs;
    const auto rows = session::pair_logs(run.baseline, run.candidate, c.value("followups_only", false));
    run.report = drift::drift_report(rows, c.value("gate", 0.03), basin.attractors);
    runs.push_back(std::move(run));
  }
  return runs;
}

namespace detail {

inline double drift_metric(const CohortRun& run, const std::string& key) {
  const auto& r = run.report;
  if (key == "n_rows") return static_cast<double>(r.n_rows);
  if (key == "choice_diffs") return static_cast<double>(r.choice_diffs);
  if (key == "correctness_diffs") return static_cast<double>(r.correctness_diffs);
  if (key == "text_diffs") return static_cast<double>(r.text_diffs);
  if (key == "gate_pass") return r.gate_pass ? 1.0 : 0.0;
  if (key == "pathological_candidate") return static_cast<double>(r.pathological_candidate);
  if (key == "sessions_with_drift") return static_cast<double>(r.sessions_with_drift);
  if (key == "early_rows") return static_cast<double>(r.early.rows);
  if (key == "early_choice_diffs") return static_cast<double>(r.early.choice_diffs);
  if (key == "late_rows") return static_cast<double>(r.late.rows);
  if (key == "late_choice_diffs") return static_cast<double>(r.late.choice_diffs);
  if (key == "followup_rows" || key == "post_repair_rows") {
    double n = 0;
    for (const auto& log : run.candidate) {
      for (const auto& rec : log.records) {
        if (rec.turn == 0) continue;
        if (key == "post_repair_rows" && rec.cache_source == session::CacheSource::Repaired) continue;
        ++n;
      }
    }
    return n;
  }
  throw Error(ErrorCode::Schema, "unknown drift expectation '" + key + "'");
}

}  // namespace detail

// Paired-drift cohorts, cache-correctness rows, Jaccard overlap and the
// rule-of-three bounds. All counts are exact.
inline Result reproduce_drift(const std::filesystem::path& dir = fixture_dir()) {
  Result result{"drift", {}};
  const auto doc = read_json_file(dir / "drift_cohorts.json");
  const auto runs = run_drift_cohorts(dir);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const auto& [key, expected] : doc.at("cohorts")[i].at("expect").items()) {
      const double want = expected.is_boolean() ? (expected.get<bool>() ? 1.0 : 0.0) : expected.get<double>();
      result.add(runs[i].name, key, want, detail::drift_metric(runs[i], key), 0.0);
    }
  }

  const auto cc = read_json_file(dir / "cache_correctness.json");
  for (const auto& set : cc.at("sets")) {
    std::vector<drift::PairedRow> rows;
    for (const auto& r : set.at("rows")) rows.push_back(drift::paired_row_from_json(r));
    const auto out = drift::cache_correctness_diff(rows);
    const auto name = set.at("name").get<std::string>();
    for (const auto& [key, expected] : set.at("expect").items()) {
      double actual = 0;
      if (key == "text_identical") actual = static_cast<double>(out.text_identical);
      else if (key == "choice_diffs") actual = static_cast<double>(out.choice_diffs);
      else if (key == "correctness_diffs") actual = static_cast<double>(out.correctness_diffs);
      else if (key == "matched_parse_failures") actual = static_cast<double>(out.matched_parse_failures);
      else throw Error(ErrorCode::Schema, "unknown cache-correctness expectation '" + key + "'");
      result.add(name, key, expected.get<double>(), actual, 0.0);
    }
  }

  const auto jac = read_json_file(dir / "jaccard_sets.json");
  const auto a = jac.at("cache_reuse").get<std::set<std::string>>();
  const auto b = jac.at("cache_invalidated").get<std::set<std::string>>();
  result.add("drift-set overlap", "jaccard", jac.at("expect").get<double>(), drift::jaccard_drift_overlap(a, b), 1e-12);

  const auto r3 = read_json_file(dir / "rule_of_three.json");
  for (const auto& c : r3.at("cases")) {
    const auto n = c.at("n").get<std::size_t>();
    result.add("rule of three", "n=" + std::to_string(n), c.at("expect").get<double>(), drift::rule_of_three(n),
               r3.value("tolerance", 0.0001));
  }
  return result;
}

struct TimingRun {
  std::vector<session::SessionLog> fixed;
  std::vector<session::SessionLog> adaptive;
  double paired_speedup = 0;
  double fixed_tail = 0;
  double adaptive_tail = 0;
  double fixed_coverage = 0;
  double adaptive_coverage = 0;
  double tail_reduction_pct = 0;
};

inline TimingRun run_timing(const Json& doc) {
  const auto latency = session::latency_from_json(doc.at("latency"));
  const auto basin = session::basin_from_json(doc.at("basin"));
  const auto schedules = session::schedules_from_json(doc.at("schedules"));
  const auto seed = doc.value("seed", std::uint64_t{0});
  const auto turn = doc.value("turn", std::size_t{2});
  TimingRun t;
  t.fixed = session::run_cohort(schedules, session::Policy::fixed_k(1), {}, latency, basin, seed).logs;
  t.adaptive = session::run_cohort(schedules, session::Policy::adaptive(), {}, latency, basin, seed).logs;
  t.paired_speedup = session::paired_turn_speedup(t.fixed, t.adaptive, turn);
  t.fixed_tail = session::median_tail_tokens_at_turn(t.fixed, turn);
  t.adaptive_tail = session::median_tail_tokens_at_turn(t.adaptive, turn);
  t.fixed_coverage = session::median_at_turn(t.fixed, turn, &session::QueryRecord::prefix_coverage);
  t.adaptive_coverage = session::median_at_turn(t.adaptive, turn, &session::QueryRecord::prefix_coverage);
  t.tail_reduction_pct = 100.0 * (t.fixed_tail - t.adaptive_tail) / t.fixed_tail;
  return t;
}

inline Result reproduce_timing(const std::filesystem::path& dir = fixture_dir()) {
  Result result{"timing", {}};
  const auto doc = read_json_file(dir / "timing_attribution.json");
  const auto t = run_timing(doc);
  const auto& e = doc.at("expect");
  auto add = [&](const char* key, double actual) {
    result.add("second follow-up", key, e.at(key).at("value").get<double>(), actual, e.at(key).at("tolerance").get<double>());
  };
  add("paired_speedup", t.paired_speedup);
  add("tail_token_reduction_pct", t.tail_reduction_pct);
  add("fixed_tail_tokens", t.fixed_tail);
  add("adaptive_tail_tokens", t.adaptive_tail);
  add("fixed_coverage", t.fixed_coverage);
  add("adaptive_coverage", t.adaptive_coverage);
  return result;
}

struct BaselineRun {
  std::vector<baselines::EventSpec> events;
  baselines::DetectorJitter jitter;
  baselines::BaselineTable table;
};

inline BaselineRun run_baselines(const Json& doc) {
  const auto& corpus = doc.at("corpus");
  BaselineRun run;
  run.events = baselines::make_midstream_corpus(corpus.value("n_events", std::size_t{22}),
                                                corpus.value("length", std::int64_t{100}),
                                                corpus.value("seed", std::uint64_t{2026}));
  run.jitter = baselines::jitter_from_json(doc.at("detector_jitter"));
  run.table = baselines::baseline_table(run.events, baselines::SelectionPolicy::all(), run.jitter);
  return run;
}

// Ordering property only: uniform low-fps sampling must beat every other
// policy on mid-stream windows by at least one event.
inline Result reproduce_baselines(const std::filesystem::path& dir = fixture_dir()) {
  Result result{"baselines", {}};
  const auto run = run_baselines(read_json_file(dir / "baselines_midstream.json"));
  const auto& rows = run.table.rows;
  const auto low = static_cast<double>(rows.front().matches);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    result.add_at_least(rows.front().policy.name() + " vs " + rows[i].policy.name(), "match margin", 1.0,
                        low - static_cast<double>(rows[i].matches));
  }
  return result;
}

}  // namespace reuselab::reproduce

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "reuselab/baselines.hpp"
#include "reuselab/ceiling.hpp"
#include "reuselab/drift.hpp"
#include "reuselab/framestream.hpp"
#include "reuselab/io.hpp"
#include "reuselab/planner.hpp"
#include "reuselab/reproduce.hpp"
#include "reuselab/session.hpp"
#include "reuselab/table.hpp"

namespace reuselab::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kAcceptanceFailure = 1, kUsage = 2 };

enum class Format { Markdown, Csv, Json };

inline Format parse_format(const std::string& s) {
  if (s == "md" || s == "markdown") return Format::Markdown;
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw Error(ErrorCode::Config, "unknown format '" + s + "' (md|csv|json)");
}

// Text produced by a command plus its exit code. The caller decides whether
// the text goes to --out or stdout.
struct Output {
  std::string text;
  int exit_code = kOk;
};

inline Json header(const std::string& command, Json config) {
  return Json{{"type", "header"}, {"tool", "reuselab"}, {"version", kVersion}, {"command", command}, {"config", std::move(config)}};
}

// Footer lines are part of the output and therefore must not contain
// anything run-dependent (no timestamps, no absolute build paths).
inline std::vector<std::string> footer(const std::vector<std::string>& inputs, std::optional<std::uint64_t> seed) {
  std::string in = "inputs:";
  for (const auto& i : inputs) in += " " + i;
  if (inputs.empty()) in += " (none)";
  return {in, "seed: " + (seed ? std::to_string(*seed) : std::string("n/a")), std::string("reuselab ") + kVersion};
}

inline std::string render(Table table, Format format, const std::vector<std::string>& inputs,
                          std::optional<std::uint64_t> seed) {
  table.footer = footer(inputs, seed);
  return format == Format::Csv ? table.to_csv() : table.to_markdown();
}

inline std::string path_string(const std::filesystem::path& p) { return p.generic_string(); }

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  std::filesystem::path spec;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;  // overrides the spec's seed
};

inline Output run_synth(const SynthOptions& o) {
  auto spec = framestream::synth_spec_from_json(read_json_file(o.spec));
  if (o.seed) spec.seed = *o.seed;
  const auto result = framestream::synth_stream(spec);
  framestream::write_synth_dir(o.out_dir, result);
  return {"wrote " + std::to_string(spec.n_frames) + " frames to " + path_string(o.out_dir) + "\n", kOk};
}

// ---------------------------------------------------------------------------
// plan

struct PlanOptions {
  std::filesystem::path stream;  // manifest, or a directory holding manifest.json
  planner::PlanConfig config;
  std::optional<std::size_t> pad_target;
  bool with_scores = false;
};

inline std::filesystem::path resolve_manifest(const std::filesystem::path& p) {
  return std::filesystem::is_directory(p) ? p / "manifest.json" : p;
}

inline Output run_plan(const PlanOptions& o) {
  auto stream = framestream::load_stream(resolve_manifest(o.stream));
  std::optional<framestream::ActiveMask> mask;
  if (o.pad_target) {
    for (auto& frame : stream.frames) {
      auto padded = framestream::square_pad_resize(frame, *o.pad_target, o.config.block_size);
      frame = std::move(padded.frame);
      mask = std::move(padded.mask);  // same for every frame of one stream
    }
  }
  const auto log = planner::plan_stream(stream, o.config, mask);
  Json config = o.config.to_json();
  config["stream"] = path_string(o.stream);
  config["pad_target"] = o.pad_target ? Json(*o.pad_target) : Json();
  config["with_scores"] = o.with_scores;
  std::vector<Json> records{header("plan", config)};
  for (auto& r : planner::plan_to_jsonl(log, o.with_scores)) records.push_back(std::move(r));
  return {to_jsonl(records), kOk};
}

// ---------------------------------------------------------------------------
// ceiling

struct CeilingOptions {
  std::filesystem::path cells;
  double tolerance_pp = 5.0;
  Format format = Format::Markdown;
};

inline Json report_to_json(const ceiling::CeilingReport& report) {
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    rows.push_back(Json{{"name", ceiling::cell_name(row.cell)},
                        {"predicted", row.predicted},
                        {"residual_pp", row.residual_pp ? Json(*row.residual_pp) : Json()},
                        {"within_tolerance", row.within_tolerance ? Json(*row.within_tolerance) : Json()}});
  }
  return Json{{"tolerance_pp", report.tolerance_pp}, {"rows", rows}};
}

inline Output run_ceiling(const CeilingOptions& o) {
  if (!(o.tolerance_pp >= 0)) throw Error(ErrorCode::Config, "tolerance must be >= 0");
  const auto report = ceiling::ceiling_report(ceiling::cells_from_json(read_json_file(o.cells)), o.tolerance_pp);
  if (o.format == Format::Json) {
    Json doc = report_to_json(report);
    doc["header"] = header("ceiling", Json{{"cells", path_string(o.cells)}, {"tolerance_pp", o.tolerance_pp}});
    return {doc.dump(2) + "\n", kOk};
  }
  return {render(ceiling::report_table(report), o.format, {path_string(o.cells)}, std::nullopt), kOk};
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::filesystem::path schedules;
  std::string policy = "adaptive";
  std::optional<std::filesystem::path> latency;
  std::optional<std::filesystem::path> basin;
  std::optional<std::filesystem::path> oracle;
  std::uint64_t seed = 0;
  bool allow_fixture_policies = false;
};

inline Json summary_to_json(const session::CohortSummary& s) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(); };
  Json per_turn = Json::array();
  for (const auto& t : s.per_turn) {
    per_turn.push_back(Json{{"turn", t.turn},
                            {"count", t.count},
                            {"median_latency_s", t.median_latency_s},
                            {"median_tail_tokens", t.median_tail_tokens}});
  }
  return Json{{"type", "summary"},
              {"sessions", s.sessions},
              {"queries", s.queries},
              {"follow_ups", s.follow_ups},
              {"median_first_latency_s", opt(s.median_first_latency_s)},
              {"median_followup_latency_s", opt(s.median_followup_latency_s)},
              {"per_turn", per_turn}};
}

inline Output run_simulate(const SimulateOptions& o) {
  const auto schedules = session::schedules_from_json(read_json_file(o.schedules));
  const auto policy = session::parse_policy(o.policy, o.allow_fixture_policies);
  const auto latency = o.latency ? session::latency_from_json(read_json_file(*o.latency)) : session::LatencyModel{};
  const auto basin = o.basin ? session::basin_from_json(read_json_file(*o.basin)) : session::BasinModel{};
  const auto oracle = o.oracle ? session::oracle_from_json(read_json_file(*o.oracle)) : session::OracleConfig{};
  latency.validate();
  const auto cohort = session::run_cohort(schedules, policy, oracle, latency, basin, o.seed);

  Json config{{"schedules", path_string(o.schedules)},
              {"policy", policy.to_string()},
              {"seed", o.seed},
              {"latency", session::latency_to_json(latency)},
              {"basin", session::basin_to_json(basin)},
              {"oracle", session::oracle_to_json(oracle)}};
  std::vector<Json> records{header("simulate", config)};
  for (auto& r : session::logs_to_jsonl(cohort.logs)) records.push_back(std::move(r));
  records.push_back(summary_to_json(cohort.summary));
  return {to_jsonl(records), kOk};
}

// ---------------------------------------------------------------------------
// audit

struct AuditOptions {
  std::filesystem::path baseline;
  std::filesystem::path candidate;
  double gate = 0.03;
  std::optional<std::filesystem::path> attractors;
  std::optional<std::size_t> split_turn;
  bool followups_only = false;
  Format format = Format::Json;
};

inline Output run_audit(const AuditOptions& o) {
  const auto base = session::logs_from_jsonl(read_jsonl_file(o.baseline));
  const auto cand = session::logs_from_jsonl(read_jsonl_file(o.candidate));
  const auto attractors =
      o.attractors ? drift::attractors_from_json(read_json_file(*o.attractors)) : drift::AttractorSet::defaults();
  const auto rows = session::pair_logs(base, cand, o.followups_only);
  const auto report = drift::drift_report(rows, o.gate, attractors, o.split_turn);
  std::vector<std::string> inputs{path_string(o.baseline), path_string(o.candidate)};
  if (o.attractors) inputs.push_back(path_string(*o.attractors));
  if (o.format == Format::Json) {
    Json doc{{"header", header("audit", Json{{"baseline", inputs[0]},
                                            {"candidate", inputs[1]},
                                            {"attractors", o.attractors ? Json(inputs[2]) : Json()},
                                            {"gate", o.gate},
                                            {"split_turn", o.split_turn ? Json(*o.split_turn) : Json()},
                                            {"followups_only", o.followups_only}})},
             {"report", drift::report_to_json(report)},
             {"markdown", drift::report_table(report).to_markdown()}};
    return {doc.dump(2) + "\n", kOk};
  }
  return {render(drift::report_table(report), o.format, inputs, std::nullopt), kOk};
}

// ---------------------------------------------------------------------------
// baseline

struct BaselineOptions {
  std::optional<std::filesystem::path> events;  // unset: built-in mid-stream corpus
  std::string policies = "all";
  std::optional<std::filesystem::path> detector_jitter;
  std::uint64_t seed = 2026;  // corpus seed when no events file is given
  Format format = Format::Markdown;
};

inline std::vector<baselines::SelectionPolicy> parse_policy_list(const std::string& text) {
  if (text == "all") return baselines::SelectionPolicy::all();
  std::vector<baselines::SelectionPolicy> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(baselines::parse_selection_policy(item));
  if (out.empty()) throw Error(ErrorCode::Config, "no selection policies given");
  return out;
}

inline Output run_baseline(const BaselineOptions& o) {
  const auto events = o.events ? baselines::events_from_json(read_json_file(*o.events))
                               : baselines::make_midstream_corpus(22, 100, o.seed);
  const auto jitter = o.detector_jitter ? baselines::jitter_from_json(read_json_file(*o.detector_jitter))
                                        : baselines::DetectorJitter{};
  const auto table = baselines::baseline_table(events, parse_policy_list(o.policies), jitter);
  std::vector<std::string> inputs{o.events ? path_string(*o.events) : "builtin:midstream"};
  if (o.detector_jitter) inputs.push_back(path_string(*o.detector_jitter));
  if (o.format == Format::Json) {
    Json rows = Json::array();
    for (const auto& r : table.rows) {
      Json verdicts = Json::array();
      for (auto v : r.per_event) verdicts.push_back(v == baselines::Verdict::Match ? "match" : "miss");
      rows.push_back(Json{{"policy", r.policy.name()}, {"matches", r.matches}, {"events", r.events}, {"rank", r.rank},
                          {"per_event", verdicts}});
    }
    Json doc{{"header", header("baseline", Json{{"events", inputs[0]},
                                               {"policies", o.policies},
                                               {"detector_jitter", baselines::jitter_to_json(jitter)},
                                               {"seed", o.seed}})},
             {"rows", rows}};
    return {doc.dump(2) + "\n", kOk};
  }
  return {render(baselines::render(table), o.format, inputs, o.events ? std::nullopt : std::optional(o.seed)), kOk};
}

// ---------------------------------------------------------------------------
// reproduce

struct ReproduceOptions {
  std::string target = "all";  // ceiling|economics|drift|timing|baselines|all
  std::optional<std::filesystem::path> fixtures;
  Format format = Format::Markdown;
};

inline std::vector<reproduce::Result> reproduce_targets(const std::string& target, const std::filesystem::path& dir) {
  std::vector<reproduce::Result> out;
  const bool all = target == "all";
  if (all || target == "ceiling") out.push_back(reproduce::reproduce_ceiling(dir));
  if (all || target == "economics") out.push_back(reproduce::reproduce_economics(dir));
  if (all || target == "drift") out.push_back(reproduce::reproduce_drift(dir));
  if (all || target == "timing") out.push_back(reproduce::reproduce_timing(dir));
  if (all || target == "baselines") out.push_back(reproduce::reproduce_baselines(dir));
  if (out.empty()) throw Error(ErrorCode::Config, "unknown reproduce target '" + target + "'");
  return out;
}

// Exit 1 when any regenerated value disagrees with its fixture.
inline Output run_reproduce(const ReproduceOptions& o) {
  const auto dir = o.fixtures ? *o.fixtures : reproduce::fixture_dir();
  const auto results = reproduce_targets(o.target, dir);
  bool ok = true;
  for (const auto& r : results) ok = ok && r.all_pass();
  std::string text;
  if (o.format == Format::Json) {
    Json doc{{"header", header("reproduce", Json{{"target", o.target}})}, {"results", Json::array()}};
    for (const auto& r : results) {
      Json checks = Json::array();
      for (const auto& c : r.checks) {
        checks.push_back(Json{{"subject", c.subject}, {"metric", c.metric}, {"expected", c.expected}, {"actual", c.actual},
                              {"tolerance", c.tolerance}, {"relation", c.at_least ? ">=" : "~="}, {"pass", c.pass}});
      }
      doc["results"].push_back(Json{{"title", r.title}, {"pass", r.all_pass()}, {"checks", checks}});
    }
    text = doc.dump(2) + "\n";
  } else {
    for (const auto& r : results) {
      if (o.format == Format::Markdown) {
        text += "## " + r.title + " (" + std::to_string(r.checks.size() - r.failures()) + "/" +
                std::to_string(r.checks.size()) + " ok)\n\n";
      }
      text += render(reproduce::to_table(r), o.format, {"fixtures:" + r.title}, std::nullopt);
      if (o.format == Format::Markdown) text += "\n";
    }
  }
  return {text, ok ? kOk : kAcceptanceFailure};
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
  std::optional<std::filesystem::path> baseline;   // cold arm session log
  std::vector<std::filesystem::path> arms;         // session logs to compare
  std::optional<std::filesystem::path> cells;      // ceiling cells instead of logs
  double tolerance_pp = 5.0;
  double gate = 0.03;
  Format format = Format::Markdown;
};

// Session-cohort table. Every speedup column names its denominator.
inline Table session_report_table(const std::vector<session::SessionLog>& baseline,
                                  const std::vector<std::pair<std::string, std::vector<session::SessionLog>>>& arms,
                                  double gate) {
  Table t;
  t.headers = {"Arm", "Policy", "Sessions", "Queries", "Median follow-up (s)",
               "Warm speedup (cold follow-up median / arm follow-up median)",
               "All-query speedup (cold total / arm total)", "Choice drift", "Correct drift", "Gate"};
  const auto cold = session::summarize(baseline);
  double cold_total = 0;
  for (const auto& log : baseline) {
    for (const auto& r : log.records) cold_total += r.latency_s;
  }
  for (const auto& [name, logs] : arms) {
    const auto s = session::summarize(logs);
    double total = 0;
    for (const auto& log : logs) {
      for (const auto& r : log.records) total += r.latency_s;
    }
    const auto policy = logs.empty() ? std::string("-") : logs.front().policy;
    std::string warm = "-";
    if (s.median_followup_latency_s && cold.median_followup_latency_s) {
      warm = fixed(session::warm_speedup(*cold.median_followup_latency_s, *s.median_followup_latency_s), 2) + "x";
    }
    const auto all = total > 0 && cold_total > 0 ? fixed(cold_total / total, 2) + "x" : "-";
    std::string choice = "-", correct = "-", verdict = "-";
    const auto rows = session::pair_logs(baseline, logs, true);
    if (!rows.empty()) {
      const auto rep = drift::drift_report(rows, gate);
      choice = drift::ratio(rep.choice_diffs, rep.n_rows);
      correct = drift::ratio(rep.correctness_diffs, rep.n_rows);
      verdict = rep.gate_pass ? "pass" : "fail";
    }
    t.rows.push_back({name, policy, std::to_string(s.sessions), std::to_string(s.queries),
                      s.median_followup_latency_s ? fixed(*s.median_followup_latency_s, 3) : "-", warm, all, choice,
                      correct, verdict});
  }
  return t;
}

inline Output run_report(const ReportOptions& o) {
  if (o.cells) {
    CeilingOptions c{*o.cells, o.tolerance_pp, o.format};
    return run_ceiling(c);
  }
  if (!o.baseline) throw Error(ErrorCode::Config, "report needs --baseline with --arm logs, or --cells");
  const auto baseline = session::logs_from_jsonl(read_jsonl_file(*o.baseline));
  std::vector<std::pair<std::string, std::vector<session::SessionLog>>> arms;
  std::vector<std::string> inputs{path_string(*o.baseline)};
  for (const auto& a : o.arms) {
    arms.emplace_back(a.stem().string(), session::logs_from_jsonl(read_jsonl_file(a)));
    inputs.push_back(path_string(a));
  }
  const auto table = session_report_table(baseline, arms, o.gate);
  if (o.format == Format::Json) throw Error(ErrorCode::Config, "report renders md or csv");
  return {render(table, o.format, inputs, std::nullopt), kOk};
}

}  // namespace reuselab::cli

#include <CLI11.hpp>

#include <iostream>

#include "reuselab/cli.hpp"

namespace {

using namespace reuselab;

void emit(const cli::Output& out, const std::string& path) {
  if (path.empty()) {
    std::cout << out.text;
  } else {
    write_text_file(path, out.text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reuselab: frame-reuse planning, cache-reuse sessions and drift audits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("reuselab ") + cli::kVersion);

  std::string out_path;
  std::string format = "md";
  cli::Output result;
  std::function<void()> action;

  // synth
  cli::SynthOptions synth;
  std::uint64_t synth_seed = 0;
  auto* s = app.add_subcommand("synth", "render a synthetic stream with exact change truth");
  s->add_option("--spec", synth.spec, "synth spec JSON")->required()->check(CLI::ExistingFile);
  s->add_option("--out", synth.out_dir, "output directory")->required();
  auto* synth_seed_opt = s->add_option("--seed", synth_seed, "override the spec seed");
  s->callback([&] {
    if (*synth_seed_opt) synth.seed = synth_seed;
    action = [&] { result = cli::run_synth(synth); };
  });

  // plan
  cli::PlanOptions plan;
  std::size_t pad_target = 0;
  auto* p = app.add_subcommand("plan", "plan block reuse over a frame stream");
  p->add_option("--stream", plan.stream, "manifest JSON or synth directory")->required();
  p->add_option("--tau-static", plan.config.thresholds.tau_static, "static threshold")->capture_default_str();
  p->add_option("--tau-novel", plan.config.thresholds.tau_novel, "novel threshold")->capture_default_str();
  p->add_option("--max-age", plan.config.max_age, "bounded staleness limit")->capture_default_str();
  p->add_option("--block-size", plan.config.block_size, "block edge in pixels")->capture_default_str();
  auto* pad_opt = p->add_option("--pad-target", pad_target, "square-pad and resize frames to this side first");
  p->add_flag("--with-scores", plan.with_scores, "include raw block scores");
  p->add_option("--out", out_path, "output JSONL (default stdout)");
  p->callback([&] {
    if (*pad_opt) plan.pad_target = pad_target;
    action = [&] { result = cli::run_plan(plan); };
  });

  // ceiling
  cli::CeilingOptions ceil;
  auto* c = app.add_subcommand("ceiling", "stage-share and scatter-back ceiling report");
  c->add_option("--cells", ceil.cells, "cells JSON")->required()->check(CLI::ExistingFile);
  c->add_option("--tolerance-pp", ceil.tolerance_pp, "residual tolerance in pp")->capture_default_str();
  c->add_option("--format", format, "md|csv|json")->capture_default_str();
  c->add_option("--out", out_path, "output path (default stdout)");
  c->callback([&] {
    ceil.format = cli::parse_format(format);
    action = [&] { result = cli::run_ceiling(ceil); };
  });

  // simulate
  cli::SimulateOptions sim;
  std::string latency, basin, oracle;
  auto* m = app.add_subcommand("simulate", "simulate multi-turn cache-reuse sessions");
  m->add_option("--schedules", sim.schedules, "schedules JSON")->required()->check(CLI::ExistingFile);
  m->add_option("--policy", sim.policy, "cold|raw|adaptive|fixed-k:N|refresh:N")->capture_default_str();
  m->add_option("--latency", latency, "latency model JSON");
  m->add_option("--basin", basin, "basin model JSON");
  m->add_option("--oracle", oracle, "answer-oracle corruption rules JSON");
  m->add_option("--seed", sim.seed, "session seed")->capture_default_str();
  m->add_flag("--allow-fixture-policies", sim.allow_fixture_policies, "accept failed-adaptive");
  m->add_option("--out", out_path, "output JSONL (default stdout)");
  m->callback([&] {
    if (!latency.empty()) sim.latency = latency;
    if (!basin.empty()) sim.basin = basin;
    if (!oracle.empty()) sim.oracle = oracle;
    action = [&] { result = cli::run_simulate(sim); };
  });

  // audit
  cli::AuditOptions audit;
  std::string attractors;
  std::size_t split_turn = 0;
  std::string audit_format = "json";
  auto* a = app.add_subcommand("audit", "paired drift audit of two session logs");
  a->add_option("--baseline", audit.baseline, "baseline JSONL")->required()->check(CLI::ExistingFile);
  a->add_option("--candidate", audit.candidate, "candidate JSONL")->required()->check(CLI::ExistingFile);
  a->add_option("--gate", audit.gate, "choice-drift gate")->capture_default_str();
  a->add_option("--attractors", attractors, "attractor strings JSON");
  auto* split_opt = a->add_option("--split-turn", split_turn, "first late turn");
  a->add_flag("--followups-only", audit.followups_only, "skip turn 0");
  a->add_option("--format", audit_format, "json|md|csv")->capture_default_str();
  a->add_option("--out", out_path, "output path (default stdout)");
  a->callback([&] {
    if (!attractors.empty()) audit.attractors = attractors;
    if (*split_opt) audit.split_turn = split_turn;
    audit.format = cli::parse_format(audit_format);
    action = [&] { result = cli::run_audit(audit); };
  });

  // baseline
  cli::BaselineOptions base;
  std::string events, jitter;
  auto* b = app.add_subcommand("baseline", "streaming frame-selection baselines");
  b->add_option("--events", events, "event corpus JSON (default: built-in mid-stream corpus)");
  b->add_option("--policies", base.policies, "all or a comma list")->capture_default_str();
  b->add_option("--detector-jitter", jitter, "detector jitter JSON");
  b->add_option("--seed", base.seed, "built-in corpus seed")->capture_default_str();
  b->add_option("--format", format, "md|csv|json")->capture_default_str();
  b->add_option("--out", out_path, "output path (default stdout)");
  b->callback([&] {
    if (!events.empty()) base.events = events;
    if (!jitter.empty()) base.detector_jitter = jitter;
    base.format = cli::parse_format(format);
    action = [&] { result = cli::run_baseline(base); };
  });

  // reproduce
  cli::ReproduceOptions repro;
  std::string fixtures;
  auto* r = app.add_subcommand("reproduce", "regenerate bundled fixture values and diff them");
  r->add_option("target", repro.target, "ceiling|economics|drift|timing|baselines|all")->capture_default_str();
  r->add_option("--fixtures", fixtures, "fixture directory (env REUSELAB_FIXTURE_DIR)");
  r->add_option("--format", format, "md|csv|json")->capture_default_str();
  r->add_option("--out", out_path, "output path (default stdout)");
  r->callback([&] {
    if (!fixtures.empty()) repro.fixtures = fixtures;
    repro.format = cli::parse_format(format);
    action = [&] { result = cli::run_reproduce(repro); };
  });

  // report
  cli::ReportOptions report;
  std::string report_base, cells;
  std::vector<std::string> arms;
  auto* t = app.add_subcommand("report", "render tables from session logs or ceiling cells");
  t->add_option("--baseline", report_base, "cold-arm session JSONL");
  t->add_option("--arm", arms, "session JSONL to compare (repeatable)");
  t->add_option("--cells", cells, "ceiling cells JSON");
  t->add_option("--tolerance-pp", report.tolerance_pp, "ceiling tolerance")->capture_default_str();
  t->add_option("--gate", report.gate, "choice-drift gate")->capture_default_str();
  t->add_option("--format", format, "md|csv")->capture_default_str();
  t->add_option("--out", out_path, "output path (default stdout)");
  t->callback([&] {
    if (!report_base.empty()) report.baseline = report_base;
    if (!cells.empty()) report.cells = cells;
    for (const auto& arm : arms) report.arms.emplace_back(arm);
    report.format = cli::parse_format(format);
    action = [&] { result = cli::run_report(report); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kUsage;
  }

  try {
    action();
    emit(result, out_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kUsage;
  }
  return result.exit_code;
}

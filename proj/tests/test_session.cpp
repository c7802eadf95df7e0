#include <gtest/gtest.h>

#include <algorithm>

#include "reuselab/session.hpp"

using namespace reuselab;
using namespace reuselab::session;

namespace {

QuerySchedule schedule(const std::string& id, std::size_t n_frames, std::size_t turns, bool anchored = false) {
  QuerySchedule s{id, n_frames, {}};
  for (std::size_t t = 0; t < turns; ++t) {
    TurnSpec spec;
    spec.question_id = "q" + std::to_string(t % 3);
    spec.key = static_cast<char>('A' + t % 4);
    spec.dense = spec.key;
    spec.anchored = anchored && t > 0;
    s.turns.push_back(spec);
  }
  return s;
}

LatencyModel calibrated() { return LatencyModel::calibrate(451, 6.65, 50, 0.675); }

SessionLog run(const QuerySchedule& s, const Policy& p, const OracleConfig& o = {}, std::uint64_t seed = 1) {
  return run_session(s, p, o, calibrated(), BasinModel{}, seed);
}

}  // namespace

TEST(Latency, CalibrationHitsBothPoints) {
  const auto m = calibrated();
  EXPECT_NEAR(m.follow_up_seconds(451), 6.65, 1e-12);
  EXPECT_NEAR(m.follow_up_seconds(50), 0.675, 1e-12);
  EXPECT_NEAR(m.c_frame_tail, 5.975, 1e-12);
  EXPECT_THROW(LatencyModel::calibrate(50, 0.675, 451, 6.65), Error);
}

TEST(Latency, FixedOneAndRawTailsAndCoverage) {
  const auto s = schedule("v", 20, 3);
  const auto k1 = run(s, Policy::fixed_k(1));
  const auto raw = run(s, Policy::raw());
  EXPECT_EQ(k1.records[1].tail_tokens, 451u);
  EXPECT_EQ(raw.records[1].tail_tokens, 50u);
  EXPECT_NEAR(k1.records[1].prefix_coverage, 0.944, 0.0005);
  EXPECT_NEAR(raw.records[1].prefix_coverage, 0.994, 0.0005);
  EXPECT_NEAR(k1.records[1].latency_s, 6.65, 1e-9);
  EXPECT_NEAR(raw.records[1].latency_s, 0.675, 1e-9);
  // Anchoring adds its tokens to the tail.
  const auto anchored = run(schedule("v", 20, 3, true), Policy::fixed_k(1));
  EXPECT_EQ(anchored.records[1].tail_tokens, 451u + LatencyModel{}.anchor_tokens);
}

TEST(Latency, ColdTurnsCostTCold) {
  const auto log = run(schedule("v", 8, 4), Policy::cold());
  for (const auto& r : log.records) {
    EXPECT_EQ(r.cache_source, CacheSource::Fresh);
    EXPECT_DOUBLE_EQ(r.latency_s, calibrated().t_cold);
    EXPECT_DOUBLE_EQ(r.prefix_coverage, 0.0);
  }
}

TEST(Policy, ParsesKnownSpellings) {
  EXPECT_EQ(parse_policy("cold"), Policy::cold());
  EXPECT_EQ(parse_policy("fixed-k:3"), Policy::fixed_k(3));
  EXPECT_EQ(parse_policy("refresh:10"), Policy::scheduled_refresh(10));
  EXPECT_EQ(parse_policy("refresh:10").to_string(), "refresh:10");
  EXPECT_THROW(parse_policy("fixed-k:"), Error);
  EXPECT_THROW(parse_policy("fixed-k:x1"), Error);
  EXPECT_THROW(parse_policy("failed-adaptive"), Error);
  EXPECT_EQ(parse_policy("failed-adaptive", true), Policy::failed_adaptive());
  EXPECT_THROW(parse_policy("warm"), Error);
}

TEST(Policy, SourcesPerTurn) {
  const auto s = schedule("v", 8, 4);
  auto sources = [&](const Policy& p) {
    std::vector<CacheSource> out;
    for (const auto& r : run(s, p).records) out.push_back(r.cache_source);
    return out;
  };
  using C = CacheSource;
  EXPECT_EQ(sources(Policy::raw()), (std::vector<C>{C::Fresh, C::RawReused, C::RawReused, C::RawReused}));
  EXPECT_EQ(sources(Policy::fixed_k(2)), (std::vector<C>{C::Fresh, C::Repaired, C::Repaired, C::Repaired}));
  EXPECT_EQ(sources(Policy::fixed_k(0)), (std::vector<C>{C::Fresh, C::RawReused, C::RawReused, C::RawReused}));
  EXPECT_EQ(sources(Policy::adaptive()), (std::vector<C>{C::Fresh, C::Repaired, C::Inherited, C::Inherited}));
  EXPECT_EQ(sources(Policy::failed_adaptive()), (std::vector<C>{C::Fresh, C::Repaired, C::RawReused, C::RawReused}));
}

TEST(Policy, RefreshRepairsTurnOneAndEveryPeriod) {
  auto repaired = [](std::size_t turns) {
    std::vector<std::size_t> out;
    for (const auto& r : run(schedule("v", 8, turns), Policy::scheduled_refresh(10)).records) {
      if (r.cache_source == CacheSource::Repaired) out.push_back(r.turn);
    }
    return out;
  };
  EXPECT_EQ(repaired(50), (std::vector<std::size_t>{1, 10, 20, 30, 40}));
  EXPECT_EQ(repaired(51), (std::vector<std::size_t>{1, 10, 20, 30, 40, 50}));
  EXPECT_THROW(run(schedule("v", 8, 3), Policy::scheduled_refresh(0)), Error);
}

TEST(Basin, DeepRawReuseEmitsAttractors) {
  const auto log = run(schedule("v", 20, 4), Policy::raw());
  const auto attractors = drift::AttractorSet::defaults();
  EXPECT_FALSE(log.records[0].basin);
  for (std::size_t t = 1; t < 4; ++t) {
    const auto& r = log.records[t];
    EXPECT_TRUE(r.basin);
    EXPECT_TRUE(drift::is_pathological(r.raw_text, attractors));
    EXPECT_TRUE(r.choice.is_parse_fail());
    EXPECT_EQ(r.correct, false);
  }
  EXPECT_EQ(log.records[1].raw_text, "addCriterion addCriterion addCriterion");
}

TEST(Basin, ShallowOrRepairedCachesStayOut) {
  // 8 frames is below the depth threshold.
  for (const auto& r : run(schedule("v", 8, 4), Policy::raw()).records) EXPECT_FALSE(r.basin);
  for (const auto& p : {Policy::adaptive(), Policy::fixed_k(1), Policy::scheduled_refresh(3)}) {
    for (const auto& r : run(schedule("v", 20, 8), p).records) {
      EXPECT_FALSE(r.basin) << p.to_string();
      EXPECT_EQ(r.correct, true);
    }
  }
}

TEST(Basin, FailedAdaptiveFallsIn) {
  const auto log = run(schedule("v", 20, 5), Policy::failed_adaptive());
  EXPECT_FALSE(log.records[1].basin);
  for (std::size_t t = 2; t < 5; ++t) EXPECT_TRUE(log.records[t].basin);
}

TEST(Oracle, RulesApplyOnlyToMatchingNonFreshTurns) {
  OracleConfig o;
  CorruptionRule r;
  r.turn = 2;
  r.sources = {CacheSource::Inherited};
  r.choice = 'D';
  o.rules.push_back(r);
  const auto s = schedule("v", 8, 4);
  const auto adaptive = run(s, Policy::adaptive(), o);
  EXPECT_EQ(adaptive.records[2].choice, drift::Choice::of('D'));
  EXPECT_EQ(adaptive.records[3].choice, drift::Choice::of(s.turns[3].dense));
  const auto cold = run(s, Policy::cold(), o);
  EXPECT_EQ(cold.records[2].choice, drift::Choice::of(s.turns[2].dense));
}

TEST(Determinism, SameSeedSameLogsAndOrderIndependence) {
  const auto schedules = schedules_from_json(read_json_file(std::string(REUSELAB_SAMPLES_DIR) + "/schedules.json"));
  const auto oracle = oracle_from_json(read_json_file(std::string(REUSELAB_SAMPLES_DIR) + "/oracle.json"));
  auto latency = calibrated();
  latency.jitter_sigma = 0.1;
  const auto a = run_cohort(schedules, Policy::raw(), oracle, latency, BasinModel{}, 7);
  const auto b = run_cohort(schedules, Policy::raw(), oracle, latency, BasinModel{}, 7);
  EXPECT_EQ(to_jsonl(logs_to_jsonl(a.logs)), to_jsonl(logs_to_jsonl(b.logs)));

  auto reversed = schedules;
  std::reverse(reversed.begin(), reversed.end());
  const auto c = run_cohort(reversed, Policy::raw(), oracle, latency, BasinModel{}, 7);
  for (const auto& log : a.logs) {
    const auto it = std::find_if(c.logs.begin(), c.logs.end(), [&](const auto& l) { return l.video_id == log.video_id; });
    ASSERT_NE(it, c.logs.end());
    EXPECT_EQ(to_jsonl(logs_to_jsonl({log})), to_jsonl(logs_to_jsonl({*it})));
  }
  const auto d = run_cohort(schedules, Policy::raw(), oracle, latency, BasinModel{}, 8);
  EXPECT_NE(to_jsonl(logs_to_jsonl(a.logs)), to_jsonl(logs_to_jsonl(d.logs)));
}

TEST(Cohort, DuplicateVideoIsRejected) {
  std::vector<QuerySchedule> s{schedule("v", 8, 2), schedule("v", 8, 2)};
  EXPECT_THROW(run_cohort(s, Policy::raw(), {}, calibrated(), BasinModel{}, 1), Error);
}

TEST(Cohort, SummaryMedians) {
  std::vector<QuerySchedule> s{schedule("a", 20, 3), schedule("b", 20, 3)};
  const auto c = run_cohort(s, Policy::fixed_k(1), {}, calibrated(), BasinModel{}, 1);
  EXPECT_EQ(c.summary.sessions, 2u);
  EXPECT_EQ(c.summary.queries, 6u);
  EXPECT_EQ(c.summary.follow_ups, 4u);
  EXPECT_NEAR(*c.summary.median_followup_latency_s, 6.65, 1e-9);
  EXPECT_EQ(median_tail_tokens_at_turn(c.logs, 1), 451.0);
}

TEST(Economics, MedianAndWarmSpeedup) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_THROW(median({}), Error);
  EXPECT_DOUBLE_EQ(warm_speedup(6.65, 0.675), 6.65 / 0.675);
}

TEST(Economics, SessionSpeedupAgainstDirectSum) {
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const auto q = static_cast<std::size_t>(rng.uniform_int(1, 200));
    const double cold = 1 + rng.uniform() * 100, first = 1 + rng.uniform() * 100, warm = 0.1 + rng.uniform() * 10;
    double cold_total = 0, session_total = first;
    for (std::size_t k = 0; k < q; ++k) cold_total += cold;
    for (std::size_t k = 1; k < q; ++k) session_total += warm;
    ASSERT_NEAR(session_speedup(q, cold, first, warm), cold_total / session_total, 1e-9);
  }
  EXPECT_NEAR(session_speedup_from_ratios(1, 150.0, 0.99), 0.99, 1e-12);
  EXPECT_THROW(session_speedup(0, 1, 1, 1), Error);
}

TEST(Pairing, PairedSpeedupAndRows) {
  std::vector<QuerySchedule> s{schedule("a", 20, 3), schedule("b", 20, 3)};
  const auto cold = run_cohort(s, Policy::cold(), {}, calibrated(), BasinModel{}, 1).logs;
  const auto k1 = run_cohort(s, Policy::fixed_k(1), {}, calibrated(), BasinModel{}, 1).logs;
  EXPECT_NEAR(paired_turn_speedup(cold, k1, 1), calibrated().t_cold / 6.65, 1e-9);
  EXPECT_EQ(pair_logs(cold, k1).size(), 6u);
  EXPECT_EQ(pair_logs(cold, k1, true).size(), 4u);
  std::vector<SessionLog> partial{cold[0]};
  EXPECT_THROW(pair_logs(cold, partial), Error);
}

TEST(Jsonl, RoundTrip) {
  const auto logs = run_cohort({schedule("a", 20, 3), schedule("b", 8, 2)}, Policy::adaptive(), {}, calibrated(),
                               BasinModel{}, 3)
                        .logs;
  const auto rows = logs_to_jsonl(logs);
  const auto back = logs_from_jsonl(rows);
  EXPECT_EQ(to_jsonl(logs_to_jsonl(back)), to_jsonl(rows));
}

TEST(Schedules, CycleForm) {
  const auto s = schedules_from_json(read_json_file(std::string(REUSELAB_SAMPLES_DIR) + "/schedules.json"));
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].video_id, "clip01");
  EXPECT_EQ(s[0].turns.size(), 6u);
  EXPECT_EQ(s[0].turns[3].question_id, "q1");
  EXPECT_EQ(s[0].turns[2].dense, 'D');
}

TEST(Schedules, InvalidOptionIsRejectedWithTurnIndex) {
  auto bad = Json::parse(R"([{"video_id": "v", "n_frames": 4, "turns": [
    {"question_id": "a"}, {"question_id": "b", "n_options": 3, "key": "D"}]}])");
  try {
    schedules_from_json(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidSpec);
    EXPECT_EQ(e.index(), 1u);
  }
}

#include <gtest/gtest.h>

#include "reuselab/baselines.hpp"

using namespace reuselab;
using namespace reuselab::baselines;

namespace {

EventSpec event(std::int64_t a, std::int64_t b, std::int64_t qt, std::int64_t len = 100, std::size_t cov = 1) {
  return EventSpec{"e", len, Window{a, b}, qt, cov};
}

// Direct oracle: walk every frame in the selection and count hits.
bool covered(const std::vector<std::int64_t>& sel, const EventSpec& e) {
  std::size_t hits = 0;
  for (auto i : sel) {
    if (e.window.start <= i && i <= e.window.end) ++hits;
  }
  return hits >= e.min_coverage;
}

EventSpec random_event(Rng& rng) {
  const auto len = rng.uniform_int(2, 300);
  const auto a = rng.uniform_int(0, len - 1);
  const auto b = rng.uniform_int(a, len - 1);
  const auto qt = rng.uniform_int(b, len - 1);
  return event(a, b, qt, len, static_cast<std::size_t>(rng.uniform_int(1, 3)));
}

}  // namespace

TEST(UniformIndices, Examples) {
  EXPECT_EQ(uniform_indices(0, 99, 4), (std::vector<std::int64_t>{0, 33, 66, 99}));
  EXPECT_EQ(uniform_indices(10, 13, 4), (std::vector<std::int64_t>{10, 11, 12, 13}));
  EXPECT_EQ(uniform_indices(5, 5, 4), (std::vector<std::int64_t>{5}));
  EXPECT_EQ(uniform_indices(0, 9, 1), (std::vector<std::int64_t>{9}));
}

TEST(UniformIndices, SortedUniqueInRangeAndHitEndpoints) {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const auto lo = rng.uniform_int(0, 100);
    const auto hi = lo + rng.uniform_int(0, 200);
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 12));
    const auto idx = uniform_indices(lo, hi, n);
    ASSERT_EQ(idx.front(), lo);
    ASSERT_EQ(idx.back(), hi);
    ASSERT_LE(idx.size(), n);
    for (std::size_t k = 1; k < idx.size(); ++k) ASSERT_LT(idx[k - 1], idx[k]);
    // Round-half-up of the real-valued position.
    if (idx.size() == n) {
      for (std::size_t k = 0; k < n; ++k) {
        const double x = double(lo) + double(k) * double(hi - lo) / double(n - 1);
        ASSERT_EQ(idx[k], static_cast<std::int64_t>(std::floor(x + 0.5 + 1e-9)));
      }
    }
  }
}

TEST(SelectFrames, Examples) {
  EXPECT_EQ(select_frames(SelectionPolicy::screenshot(), event(0, 3, 50)), (std::vector<std::int64_t>{50}));
  EXPECT_EQ(select_frames(SelectionPolicy::recency_last_k(4), event(0, 1, 2)), (std::vector<std::int64_t>{0, 1, 2}));
  EXPECT_EQ(select_frames(SelectionPolicy::event_window_proxy(4), event(0, 1, 50), Window{10, 13}),
            (std::vector<std::int64_t>{10, 11, 12, 13}));
  EXPECT_THROW(select_frames(SelectionPolicy::event_window_proxy(4), event(0, 1, 50)), Error);
  EXPECT_THROW(select_frames(SelectionPolicy::screenshot(), event(5, 3, 50)), Error);
  EXPECT_THROW(select_frames(SelectionPolicy::screenshot(), event(0, 60, 50)), Error);
}

TEST(ScoreEvent, AgreesWithDirectCount) {
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const auto e = random_event(rng);
    for (const auto& p : SelectionPolicy::all()) {
      const auto sel = select_frames(p, e, e.window);
      ASSERT_EQ(score_event(sel, e) == Verdict::Match, covered(sel, e));
    }
  }
}

TEST(ScoreEvent, WideningTheWindowNeverLosesAMatch) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    auto e = random_event(rng);
    for (const auto& p : SelectionPolicy::all()) {
      if (p.kind == SelectionPolicy::Kind::EventWindowProxy) continue;
      const auto sel = select_frames(p, e);
      const bool before = score_event(sel, e) == Verdict::Match;
      auto wider = e;
      wider.window.start = std::max<std::int64_t>(0, e.window.start - rng.uniform_int(0, 5));
      wider.window.end = std::min(e.query_time, e.window.end + rng.uniform_int(0, 5));
      if (before) {
        ASSERT_EQ(score_event(sel, wider), Verdict::Match);
      }
    }
  }
}

TEST(ScoreEvent, RecencyDominatesScreenshot) {
  Rng rng(4);
  std::vector<EventSpec> events;
  for (int i = 0; i < 300; ++i) {
    auto e = random_event(rng);
    e.min_coverage = 1;
    events.push_back(e);
  }
  const auto t = baseline_table(events, {SelectionPolicy::screenshot(), SelectionPolicy::recency_last_k()});
  EXPECT_GE(t.rows[1].matches, t.rows[0].matches);
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (t.rows[0].per_event[i] == Verdict::Match) {
      EXPECT_EQ(t.rows[1].per_event[i], Verdict::Match);
    }
  }
}

TEST(Jitter, PerfectDetectorFindsEveryEvent) {
  const auto events = make_midstream_corpus();
  const auto t = baseline_table(events, {SelectionPolicy::event_window_proxy()});
  EXPECT_EQ(t.rows[0].matches, events.size());
}

TEST(Jitter, DeterministicPerSeedAndAlwaysNonEmpty) {
  const auto events = make_midstream_corpus();
  DetectorJitter j{3, -60, 10, 5, 0.6, 4};
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto a = j.apply(events[i], i);
    const auto b = j.apply(events[i], i);
    EXPECT_EQ(a.start, b.start);
    EXPECT_EQ(a.end, b.end);
    EXPECT_FALSE(a.empty());
    EXPECT_GE(a.start, 0);
    EXPECT_LT(a.end, events[i].stream_length);
  }
}

TEST(Jitter, ZeroRecallAlwaysFallsBackToRecentFrames) {
  const auto e = event(20, 40, 99);
  DetectorJitter j;
  j.recall = 0.0;
  j.fallback_width = 4;
  const auto w = j.apply(e, 0);
  EXPECT_EQ(w.start, 96);
  EXPECT_EQ(w.end, 99);
}

TEST(Jitter, Validation) {
  DetectorJitter j;
  j.recall = 1.5;
  EXPECT_THROW(j.validate(), Error);
  j = DetectorJitter{};
  j.random_offset = -1;
  EXPECT_THROW(j.validate(), Error);
  j = DetectorJitter{};
  j.fallback_width = 0;
  EXPECT_THROW(baseline_table({event(0, 1, 2)}, {SelectionPolicy::event_window_proxy()}, j), Error);
}

TEST(Table, RanksShareTies) {
  const auto events = std::vector<EventSpec>{event(0, 10, 99), event(95, 99, 99)};
  const auto t = baseline_table(events, SelectionPolicy::all());
  // low-fps hits frame 0 and 99; screenshot and recency only the second;
  // a perfect proxy both.
  EXPECT_EQ(t.rows[0].matches, 2u);
  EXPECT_EQ(t.rows[1].matches, 1u);
  EXPECT_EQ(t.rows[2].matches, 1u);
  EXPECT_EQ(t.rows[0].rank, 1u);
  EXPECT_EQ(t.rows[3].rank, 1u);
  EXPECT_EQ(t.rows[1].rank, 3u);
  EXPECT_EQ(t.rows[2].rank, 3u);
  EXPECT_EQ(render(t).rows.size(), 4u);
}

TEST(Corpus, ValidAndDeterministic) {
  const auto a = make_midstream_corpus(22, 100, 2026);
  const auto b = make_midstream_corpus(22, 100, 2026);
  ASSERT_EQ(a.size(), 22u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NO_THROW(a[i].validate());
    EXPECT_EQ(event_to_json(a[i]), event_to_json(b[i]));
  }
}

TEST(Json, EventsAndJitterRoundTrip) {
  const auto events = make_midstream_corpus(5);
  Json arr = Json::array();
  for (const auto& e : events) arr.push_back(event_to_json(e));
  const auto back = events_from_json(arr);
  ASSERT_EQ(back.size(), 5u);
  EXPECT_EQ(event_to_json(back[3]), event_to_json(events[3]));
  DetectorJitter j{1, 2, 3, 4, 0.5, 6};
  EXPECT_EQ(jitter_to_json(jitter_from_json(jitter_to_json(j))), jitter_to_json(j));
}

TEST(ParsePolicy, Names) {
  EXPECT_EQ(parse_selection_policy("low-fps").kind, SelectionPolicy::Kind::LowFpsDense);
  EXPECT_EQ(parse_selection_policy("screenshot").kind, SelectionPolicy::Kind::Screenshot);
  EXPECT_EQ(parse_selection_policy("recency:3").count, 3u);
  EXPECT_EQ(parse_selection_policy("proxy:8").kind, SelectionPolicy::Kind::EventWindowProxy);
  EXPECT_THROW(parse_selection_policy("recency:0"), Error);
  EXPECT_THROW(parse_selection_policy("proxy8"), Error);
  EXPECT_THROW(parse_selection_policy("random"), Error);
}

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reuselab/error.hpp"
#include "reuselab/io.hpp"
#include "reuselab/rng.hpp"
#include "reuselab/table.hpp"

namespace reuselab::baselines {

// Frame indices are inclusive on both ends.
struct Window {
  std::int64_t start = 0;
  std::int64_t end = 0;

  bool empty() const noexcept { return end < start; }
  bool contains(std::int64_t i) const noexcept { return i >= start && i <= end; }
};

struct EventSpec {
  std::string id;
  std::int64_t stream_length = 0;
  Window window;
  std::int64_t query_time = 0;
  std::size_t min_coverage = 1;

  void validate() const {
    if (!(window.start >= 0 && window.start <= window.end && window.end < stream_length)) {
      throw Error(ErrorCode::InvalidSpec, "event " + id + ": window must satisfy 0 <= a <= b < length");
    }
    if (!(query_time >= window.end && query_time < stream_length)) {
      throw Error(ErrorCode::InvalidSpec, "event " + id + ": query_time must satisfy b <= query_time < length");
    }
    if (min_coverage < 1) throw Error(ErrorCode::InvalidSpec, "event " + id + ": min_coverage must be >= 1");
  }
};

struct SelectionPolicy {
  enum class Kind { LowFpsDense, Screenshot, RecencyLastK, EventWindowProxy };
  Kind kind = Kind::LowFpsDense;
  std::size_t count = 4;

  static SelectionPolicy low_fps_dense(std::size_t n = 4) { return {Kind::LowFpsDense, n}; }
  static SelectionPolicy screenshot() { return {Kind::Screenshot, 1}; }
  static SelectionPolicy recency_last_k(std::size_t k = 4) { return {Kind::RecencyLastK, k}; }
  static SelectionPolicy event_window_proxy(std::size_t n = 4) { return {Kind::EventWindowProxy, n}; }

  static std::vector<SelectionPolicy> all() {
    return {low_fps_dense(), screenshot(), recency_last_k(), event_window_proxy()};
  }

  std::string name() const {
    switch (kind) {
      case Kind::LowFpsDense: return "low-fps-dense(" + std::to_string(count) + ")";
      case Kind::Screenshot: return "screenshot";
      case Kind::RecencyLastK: return "recency-last-k(" + std::to_string(count) + ")";
      case Kind::EventWindowProxy: return "event-window-proxy(" + std::to_string(count) + ")";
    }
    return "?";
  }
};

inline SelectionPolicy parse_selection_policy(const std::string& text) {
  auto with_count = [&](const std::string& prefix, SelectionPolicy p) {
    if (text.size() > prefix.size()) {
      const auto digits = text.substr(prefix.size() + 1);
      if (text[prefix.size()] != ':' || digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
        throw Error(ErrorCode::Config, "bad selection policy '" + text + "'");
      }
      p.count = std::stoul(digits);
    }
    if (p.count < 1) throw Error(ErrorCode::Config, "selection counts must be >= 1");
    return p;
  };
  if (text.starts_with("low-fps")) return with_count("low-fps", SelectionPolicy::low_fps_dense());
  if (text == "screenshot") return SelectionPolicy::screenshot();
  if (text.starts_with("recency")) return with_count("recency", SelectionPolicy::recency_last_k());
  if (text.starts_with("proxy")) return with_count("proxy", SelectionPolicy::event_window_proxy());
  throw Error(ErrorCode::Config, "unknown selection policy '" + text + "'");
}

// n indices spread over [lo, hi] with both endpoints included, rounded half
// up and de-duplicated. n == 1 picks hi.
inline std::vector<std::int64_t> uniform_indices(std::int64_t lo, std::int64_t hi, std::size_t n) {
  if (n == 1) return {hi};
  std::vector<std::int64_t> out;
  const auto span = hi - lo;
  const auto steps = static_cast<std::int64_t>(n - 1);
  for (std::int64_t i = 0; i <= steps; ++i) out.push_back(lo + (2 * i * span + steps) / (2 * steps));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<std::int64_t> select_frames(const SelectionPolicy& policy, const EventSpec& event,
                                               const std::optional<Window>& detector_window = std::nullopt) {
  event.validate();
  if (policy.count < 1) throw Error(ErrorCode::Config, "selection counts must be >= 1");
  switch (policy.kind) {
    case SelectionPolicy::Kind::LowFpsDense:
      return uniform_indices(0, event.query_time, policy.count);
    case SelectionPolicy::Kind::Screenshot:
      return {event.query_time};
    case SelectionPolicy::Kind::RecencyLastK: {
      const auto first = std::max<std::int64_t>(0, event.query_time - static_cast<std::int64_t>(policy.count) + 1);
      std::vector<std::int64_t> out;
      for (auto i = first; i <= event.query_time; ++i) out.push_back(i);
      return out;
    }
    case SelectionPolicy::Kind::EventWindowProxy:
      if (!detector_window || detector_window->empty()) {
        throw Error(ErrorCode::Domain, "event " + event.id + ": proxy policy needs a non-empty detector window");
      }
      return uniform_indices(detector_window->start, detector_window->end, policy.count);
  }
  return {};
}

enum class Verdict { Match, Miss };

// Fresh-oracle stand-in: the selection must put at least min_coverage frames
// inside the event window.
inline Verdict score_event(const std::vector<std::int64_t>& selected, const EventSpec& event) {
  if (selected.empty()) throw Error(ErrorCode::Domain, "event " + event.id + ": empty selection");
  const auto hits = static_cast<std::size_t>(
      std::count_if(selected.begin(), selected.end(), [&](std::int64_t i) { return event.window.contains(i); }));
  return hits >= event.min_coverage ? Verdict::Match : Verdict::Miss;
}

// Detector windows derived from the true window: shifted by `offset` (plus a
// seeded per-event offset in [-random_offset, random_offset]), the end moved
// by `stretch`, then clamped to the stream. With recall < 1 the detector
// misses some events outright and reports the last `fallback_width` frames
// before the query instead. A detector always reports at least one frame.
struct DetectorJitter {
  std::int64_t offset = 0;
  std::int64_t stretch = 0;
  std::int64_t random_offset = 0;
  std::uint64_t seed = 0;
  double recall = 1.0;
  std::int64_t fallback_width = 4;

  void validate() const {
    if (!(recall >= 0.0 && recall <= 1.0)) throw Error(ErrorCode::Config, "detector recall must lie in [0, 1]");
    if (random_offset < 0 || fallback_width < 1) {
      throw Error(ErrorCode::Config, "random_offset must be >= 0 and fallback_width >= 1");
    }
  }

  Window apply(const EventSpec& event, std::size_t event_index) const {
    Rng rng(derive_seed(seed, event_index));
    const auto last = event.stream_length - 1;
    if (recall < 1.0 && !rng.bernoulli(recall)) {
      return Window{std::max<std::int64_t>(0, event.query_time - fallback_width + 1), event.query_time};
    }
    std::int64_t shift = offset;
    if (random_offset > 0) shift += rng.uniform_int(-random_offset, random_offset);
    const auto start = std::clamp<std::int64_t>(event.window.start + shift, 0, last);
    const auto end = std::clamp<std::int64_t>(event.window.end + shift + stretch, 0, last);
    return Window{start, std::max(start, end)};
  }
};

struct PolicyRow {
  SelectionPolicy policy;
  std::size_t matches = 0;
  std::size_t events = 0;
  std::size_t rank = 0;  // 1 = most matches; ties share a rank
  std::vector<Verdict> per_event;
};

struct BaselineTable {
  std::vector<PolicyRow> rows;
};

inline BaselineTable baseline_table(const std::vector<EventSpec>& events, const std::vector<SelectionPolicy>& policies,
                                    const DetectorJitter& jitter = {}) {
  if (events.empty()) throw Error(ErrorCode::Domain, "baseline table needs at least one event");
  jitter.validate();
  BaselineTable table;
  for (const auto& policy : policies) {
    PolicyRow row{policy, 0, events.size(), 0, {}};
    for (std::size_t i = 0; i < events.size(); ++i) {
      std::optional<Window> detector;
      if (policy.kind == SelectionPolicy::Kind::EventWindowProxy) detector = jitter.apply(events[i], i);
      const auto verdict = score_event(select_frames(policy, events[i], detector), events[i]);
      row.per_event.push_back(verdict);
      row.matches += verdict == Verdict::Match;
    }
    table.rows.push_back(std::move(row));
  }
  for (auto& row : table.rows) {
    row.rank = 1 + static_cast<std::size_t>(std::count_if(table.rows.begin(), table.rows.end(),
                                                          [&](const PolicyRow& o) { return o.matches > row.matches; }));
  }
  return table;
}

inline Table render(const BaselineTable& t) {
  Table out;
  out.headers = {"Policy", "Matches", "Rate", "Rank"};
  for (const auto& row : t.rows) {
    out.rows.push_back({row.policy.name(), std::to_string(row.matches) + "/" + std::to_string(row.events),
                        fixed(static_cast<double>(row.matches) / static_cast<double>(row.events), 3),
                        std::to_string(row.rank)});
  }
  return out;
}

// Deterministic stress corpus: most windows sit mid-stream well before the
// query, a few are narrow and fall between uniform samples, and a few run up
// to the query time.
inline std::vector<EventSpec> make_midstream_corpus(std::size_t n_events = 22, std::int64_t length = 100,
                                                    std::uint64_t seed = 2026) {
  std::vector<EventSpec> events;
  Rng rng(seed);
  const auto qt = length - 1;
  for (std::size_t i = 0; i < n_events; ++i) {
    EventSpec e;
    e.id = "ev" + std::to_string(i + 1);
    e.stream_length = length;
    e.query_time = qt;
    const std::size_t kind = i % 11;
    if (kind < 8) {  // medium mid-stream window
      const auto width = rng.uniform_int(length / 3 + 1, length / 2);
      const auto start = rng.uniform_int(length / 10, qt - width - length / 10);
      e.window = Window{start, start + width - 1};
    } else if (kind < 10) {  // narrow window between uniform samples
      const auto start = rng.uniform_int(length / 3 + 2, 2 * length / 3 - 8);
      e.window = Window{start, start + 4};
    } else {  // ends at the query
      e.window = Window{qt - rng.uniform_int(2, length / 10), qt};
    }
    events.push_back(e);
  }
  return events;
}

inline Json event_to_json(const EventSpec& e) {
  return Json{{"id", e.id},
              {"stream_length", e.stream_length},
              {"window", Json::array({e.window.start, e.window.end})},
              {"query_time", e.query_time},
              {"min_coverage", e.min_coverage}};
}

inline std::vector<EventSpec> events_from_json(const Json& j) {
  const Json& list = j.is_object() && j.contains("events") ? j.at("events") : j;
  if (!list.is_array()) throw Error(ErrorCode::Schema, "event corpus must be a JSON array");
  std::vector<EventSpec> events;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& item = list[i];
    const std::string where = "event " + std::to_string(i);
    EventSpec e;
    e.id = optional_field<std::string>(item, "id", "ev" + std::to_string(i + 1), where);
    e.stream_length = require<std::int64_t>(item, "stream_length", where);
    const auto w = require<std::vector<std::int64_t>>(item, "window", where);
    if (w.size() != 2) throw Error(ErrorCode::Schema, where + ": window must be [a, b]");
    e.window = Window{w[0], w[1]};
    e.query_time = require<std::int64_t>(item, "query_time", where);
    e.min_coverage = optional_field<std::size_t>(item, "min_coverage", 1, where);
    e.validate();
    events.push_back(std::move(e));
  }
  return events;
}

inline DetectorJitter jitter_from_json(const Json& j) {
  const std::string where = "detector jitter";
  return DetectorJitter{optional_field<std::int64_t>(j, "offset", 0, where),
                        optional_field<std::int64_t>(j, "stretch", 0, where),
                        optional_field<std::int64_t>(j, "random_offset", 0, where),
                        optional_field<std::uint64_t>(j, "seed", 0, where),
                        optional_field<double>(j, "recall", 1.0, where),
                        optional_field<std::int64_t>(j, "fallback_width", 4, where)};
}

inline Json jitter_to_json(const DetectorJitter& d) {
  return Json{{"offset", d.offset}, {"stretch", d.stretch}, {"random_offset", d.random_offset},
              {"seed", d.seed}, {"recall", d.recall}, {"fallback_width", d.fallback_width}};
}

}  // namespace reuselab::baselines

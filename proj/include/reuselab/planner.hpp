#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "reuselab/block_grid.hpp"
#include "reuselab/error.hpp"
#include "reuselab/framestream.hpp"
#include "reuselab/grid.hpp"
#include "reuselab/io.hpp"

namespace reuselab::planner {

using framestream::ActiveMask;
using framestream::Frame;
using framestream::FrameStream;

using ScoreGrid = Grid<std::uint8_t>;

// Scores equal to a threshold fall into the lower class.
struct Thresholds {
  int tau_static = 8;
  int tau_novel = 48;

  void validate() const {
    if (tau_static < 0 || tau_novel > 255 || tau_static >= tau_novel) {
      throw Error(ErrorCode::Config, "thresholds must satisfy 0 <= tau_static < tau_novel <= 255 (got " +
                                         std::to_string(tau_static) + ", " + std::to_string(tau_novel) + ")");
    }
  }
};

enum class BlockClass : std::uint8_t { Static, Shifted, Novel };
enum class Decision : std::uint8_t { Reuse, Fresh };

inline char class_letter(BlockClass c) {
  switch (c) {
    case BlockClass::Static: return 'S';
    case BlockClass::Shifted: return 'H';
    case BlockClass::Novel: return 'N';
  }
  return '?';
}

inline char decision_letter(Decision d) { return d == Decision::Reuse ? 'R' : 'F'; }

struct PlannerState {
  static constexpr int kDefaultMaxAge = 4;

  Grid<int> ages;  // transitions since the block was last refreshed
  int max_age = kDefaultMaxAge;

  // State right after the first frame, which is always fully fresh.
  static PlannerState initial(const BlockGrid& grid, int max_age = kDefaultMaxAge) {
    if (max_age < 0) throw Error(ErrorCode::Config, "max_age must be >= 0");
    return PlannerState{Grid<int>(grid.cols, grid.rows, 0), max_age};
  }
};

// score = max over the block's pixels and channels of |cur - prev|.
inline ScoreGrid block_scores(const Frame& prev, const Frame& cur, const BlockGrid& grid) {
  if (!prev.same_dimensions(cur) || prev.width() != grid.width() || prev.height() != grid.height()) {
    throw Error(ErrorCode::DimensionMismatch, "frames do not match each other or the block grid");
  }
  ScoreGrid scores(grid.cols, grid.rows, 0);
  const auto a = prev.pixels();
  const auto b = cur.pixels();
  const std::size_t width = prev.width();
  for (std::size_t y = 0; y < prev.height(); ++y) {
    const std::size_t row = y / grid.block_size;
    for (std::size_t x = 0; x < width; ++x) {
      auto& cell = scores.at(x / grid.block_size, row);
      const std::size_t base = (y * width + x) * 3;
      for (std::size_t c = 0; c < 3; ++c) {
        const auto d = static_cast<std::uint8_t>(std::abs(int{a[base + c]} - int{b[base + c]}));
        if (d > cell) cell = d;
      }
    }
  }
  return scores;
}

inline BlockClass classify_score(int score, const Thresholds& t) {
  if (score <= t.tau_static) return BlockClass::Static;
  if (score <= t.tau_novel) return BlockClass::Shifted;
  return BlockClass::Novel;
}

inline Grid<BlockClass> classify(const ScoreGrid& scores, const Thresholds& thresholds) {
  thresholds.validate();
  Grid<BlockClass> classes(scores.cols, scores.rows, BlockClass::Static);
  for (std::size_t i = 0; i < scores.size(); ++i) classes[i] = classify_score(scores[i], thresholds);
  return classes;
}

struct StepResult {
  PlannerState state;
  Grid<Decision> decisions;
};

// Novel blocks are refreshed. Static and Shifted blocks are reused and age by
// one, unless that would push the age past max_age, in which case they are
// refreshed instead. Refreshed blocks restart at age 0.
inline StepResult step(const PlannerState& state, const Grid<BlockClass>& classes) {
  require_same_shape(state.ages, classes, "planner step");
  StepResult out{state, Grid<Decision>(classes.cols, classes.rows, Decision::Fresh)};
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const int aged = state.ages[i] + 1;
    if (classes[i] == BlockClass::Novel || aged > state.max_age) {
      out.decisions[i] = Decision::Fresh;
      out.state.ages[i] = 0;
    } else {
      out.decisions[i] = Decision::Reuse;
      out.state.ages[i] = aged;
    }
  }
  return out;
}

// Fraction of active blocks reused; padding blocks are excluded entirely.
inline double reuse_ratio(const Grid<Decision>& decisions, const ActiveMask& mask) {
  require_same_shape(decisions, mask.active, "reuse ratio");
  std::size_t active = 0;
  std::size_t reused = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (!mask.is_active(i)) continue;
    ++active;
    if (decisions[i] == Decision::Reuse) ++reused;
  }
  if (active == 0) throw Error(ErrorCode::Domain, "active mask has no active blocks");
  return static_cast<double>(reused) / static_cast<double>(active);
}

// f_eff = 1 + (N - 1)(1 - r): the first frame is always paid in full.
inline double effective_fresh(std::size_t n_frames, double r_mean) {
  if (n_frames < 1) throw Error(ErrorCode::Domain, "frame count must be >= 1");
  if (!(r_mean >= 0.0 && r_mean <= 1.0)) throw Error(ErrorCode::Domain, "mean reuse ratio must lie in [0, 1]");
  return 1.0 + static_cast<double>(n_frames - 1) * (1.0 - r_mean);
}

struct PlanConfig {
  std::size_t block_size = BlockGrid::kDefaultBlockSize;
  Thresholds thresholds;
  int max_age = PlannerState::kDefaultMaxAge;

  Json to_json() const {
    return Json{{"block_size", block_size},
                {"tau_static", thresholds.tau_static},
                {"tau_novel", thresholds.tau_novel},
                {"max_age", max_age}};
  }
};

struct TransitionRecord {
  std::size_t t = 0;  // index of the newer frame
  ScoreGrid scores;
  Grid<BlockClass> classes;
  Grid<Decision> decisions;
  Grid<int> ages;  // after the step
  double r_reuse = 0.0;
};

struct PlanSummary {
  std::size_t n_frames = 0;
  double mean_r_reuse = 0.0;
  double f_eff = 0.0;
};

struct PlanLog {
  BlockGrid grid;
  PlanConfig config;
  ActiveMask mask;
  std::vector<TransitionRecord> transitions;
  PlanSummary summary;
};

inline PlanLog plan_stream(const FrameStream& stream, const PlanConfig& config,
                           const std::optional<ActiveMask>& mask = std::nullopt) {
  if (stream.size() < 2) throw Error(ErrorCode::Domain, "planning needs at least two frames");
  config.thresholds.validate();
  const auto grid = BlockGrid::for_frame(stream.width(), stream.height(), config.block_size);

  PlanLog log;
  log.grid = grid;
  log.config = config;
  log.mask = mask ? *mask : ActiveMask::all_active(grid);
  require_same_shape(log.mask.active, Grid<int>(grid.cols, grid.rows), "plan mask");
  if (log.mask.active_count() == 0) throw Error(ErrorCode::Domain, "active mask has no active blocks");

  auto state = PlannerState::initial(grid, config.max_age);
  double r_sum = 0.0;
  for (std::size_t t = 1; t < stream.size(); ++t) {
    TransitionRecord rec;
    rec.t = t;
    rec.scores = block_scores(stream.frames[t - 1], stream.frames[t], grid);
    rec.classes = classify(rec.scores, config.thresholds);
    auto stepped = step(state, rec.classes);
    state = std::move(stepped.state);
    rec.decisions = std::move(stepped.decisions);
    rec.ages = state.ages;
    rec.r_reuse = reuse_ratio(rec.decisions, log.mask);
    r_sum += rec.r_reuse;
    log.transitions.push_back(std::move(rec));
  }
  log.summary.n_frames = stream.size();
  log.summary.mean_r_reuse = r_sum / static_cast<double>(log.transitions.size());
  log.summary.f_eff = effective_fresh(stream.size(), log.summary.mean_r_reuse);
  return log;
}

namespace detail {

template <typename T, typename F>
Json letter_rows(const Grid<T>& g, F letter) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < g.rows; ++r) {
    std::string line;
    for (std::size_t c = 0; c < g.cols; ++c) line += letter(g.at(c, r));
    rows.push_back(line);
  }
  return rows;
}

}  // namespace detail

// One record per transition, then one summary record. Classes are row
// strings over {S,H,N} (static, shifted, novel); decisions over {R,F}.
inline std::vector<Json> plan_to_jsonl(const PlanLog& log, bool with_scores) {
  std::vector<Json> out;
  for (const auto& rec : log.transitions) {
    Json j{{"t", rec.t}};
    if (with_scores) j["scores"] = rec.scores.cells;
    j["classes"] = detail::letter_rows(rec.classes, class_letter);
    j["decisions"] = detail::letter_rows(rec.decisions, decision_letter);
    j["ages"] = rec.ages.cells;
    j["r_reuse"] = rec.r_reuse;
    out.push_back(std::move(j));
  }
  out.push_back(Json{{"type", "summary"},
                     {"n_frames", log.summary.n_frames},
                     {"mean_r_reuse", log.summary.mean_r_reuse},
                     {"f_eff", log.summary.f_eff}});
  return out;
}

}  // namespace reuselab::planner

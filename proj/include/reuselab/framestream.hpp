#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reuselab/block_grid.hpp"
#include "reuselab/error.hpp"
#include "reuselab/grid.hpp"
#include "reuselab/io.hpp"
#include "reuselab/rng.hpp"

namespace reuselab::framestream {

// Decoded 8-bit RGB frame, row-major, three channels per pixel.
class Frame {
 public:
  Frame(std::size_t width, std::size_t height, std::uint8_t fill = 0)
      : width_(width), height_(height), pixels_(width * height * 3, fill) {
    if (width == 0 || height == 0) throw Error(ErrorCode::InvalidSpec, "frame dimensions must be >= 1");
  }

  Frame(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width == 0 || height == 0) throw Error(ErrorCode::InvalidSpec, "frame dimensions must be >= 1");
    if (pixels_.size() != width * height * 3) {
      throw Error(ErrorCode::InvalidSpec, "pixel buffer length does not match width*height*3");
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

  std::uint8_t channel(std::size_t x, std::size_t y, std::size_t c) const {
    return pixels_[(y * width_ + x) * 3 + c];
  }
  void set_channel(std::size_t x, std::size_t y, std::size_t c, std::uint8_t v) {
    pixels_[(y * width_ + x) * 3 + c] = v;
  }
  void set_pixel(std::size_t x, std::size_t y, std::array<std::uint8_t, 3> rgb) {
    for (std::size_t c = 0; c < 3; ++c) set_channel(x, y, c, rgb[c]);
  }

  bool same_dimensions(const Frame& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool operator==(const Frame&) const = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> pixels_;
};

// One flag per planner block: true when the block covers original content.
struct ActiveMask {
  Grid<std::uint8_t> active;

  static ActiveMask all_active(const BlockGrid& grid) {
    return ActiveMask{Grid<std::uint8_t>(grid.cols, grid.rows, 1)};
  }

  std::size_t active_count() const {
    return static_cast<std::size_t>(std::count(active.cells.begin(), active.cells.end(), std::uint8_t{1}));
  }
  bool is_active(std::size_t i) const { return active[i] != 0; }

  bool operator==(const ActiveMask&) const = default;
};

struct FrameStream {
  std::vector<Frame> frames;
  std::string source_id;

  std::size_t size() const noexcept { return frames.size(); }
  std::size_t width() const { return frames.front().width(); }
  std::size_t height() const { return frames.front().height(); }
};

// ---------------------------------------------------------------------------
// PPM (P6, maxval 255)

namespace detail {

inline bool is_ppm_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Reads one header token, skipping whitespace and '#' comments.
inline std::optional<std::string> next_header_token(const std::string& data, std::size_t& pos) {
  while (pos < data.size()) {
    if (is_ppm_space(data[pos])) {
      ++pos;
    } else if (data[pos] == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < data.size() && !is_ppm_space(data[pos]) && data[pos] != '#') ++pos;
  if (start == pos) return std::nullopt;
  return data.substr(start, pos - start);
}

inline std::optional<std::size_t> parse_header_number(const std::optional<std::string>& token) {
  if (!token || token->empty() || token->size() > 9) return std::nullopt;
  if (!std::all_of(token->begin(), token->end(), [](char c) { return c >= '0' && c <= '9'; })) return std::nullopt;
  return static_cast<std::size_t>(std::stoul(*token));
}

}  // namespace detail

inline Frame decode_ppm(const std::string& data, const std::string& origin) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> Frame {
    throw Error(ErrorCode::MalformedPpm, origin + ": " + why);
  };
  if (detail::next_header_token(data, pos) != std::optional<std::string>("P6")) return fail("magic is not P6");
  const auto width = detail::parse_header_number(detail::next_header_token(data, pos));
  const auto height = detail::parse_header_number(detail::next_header_token(data, pos));
  const auto maxval = detail::parse_header_number(detail::next_header_token(data, pos));
  if (!width || !height || !maxval) return fail("bad header fields");
  if (*width == 0 || *height == 0) return fail("zero dimension");
  if (*maxval != 255) return fail("maxval must be 255");
  if (pos >= data.size() || !detail::is_ppm_space(data[pos])) return fail("missing raster separator");
  ++pos;
  const std::size_t expected = *width * *height * 3;
  if (data.size() - pos < expected) return fail("truncated raster");
  std::vector<std::uint8_t> pixels(data.begin() + static_cast<std::ptrdiff_t>(pos),
                                   data.begin() + static_cast<std::ptrdiff_t>(pos + expected));
  return Frame(*width, *height, std::move(pixels));
}

inline std::string encode_ppm(const Frame& frame) {
  std::string out = "P6\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
  const auto px = frame.pixels();
  out.append(reinterpret_cast<const char*>(px.data()), px.size());
  return out;
}

inline Frame read_ppm(const std::filesystem::path& path) {
  return decode_ppm(read_text_file(path), path.string());
}

inline void write_ppm(const std::filesystem::path& path, const Frame& frame) {
  write_text_file(path, encode_ppm(frame));
}

// Manifest: JSON array of image paths, relative to the manifest's directory.
// Errors carry the manifest index of the offending entry.
inline FrameStream load_stream(const std::filesystem::path& manifest_path) {
  const Json manifest = read_json_file(manifest_path);
  if (!manifest.is_array()) throw Error(ErrorCode::Schema, manifest_path.string() + ": manifest must be a JSON array");
  const auto base = manifest_path.parent_path();
  FrameStream stream;
  stream.source_id = manifest_path.string();
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (!manifest[i].is_string()) {
      throw Error(ErrorCode::Schema, "manifest entry " + std::to_string(i) + " is not a path string", i);
    }
    const auto path = base / manifest[i].get<std::string>();
    std::string bytes;
    try {
      bytes = read_text_file(path);
    } catch (const Error&) {
      throw Error(ErrorCode::FileMissing, "manifest entry " + std::to_string(i) + " (" + path.string() + ") not found", i);
    }
    Frame frame = [&] {
      try {
        return decode_ppm(bytes, path.string());
      } catch (const Error& e) {
        throw Error(ErrorCode::MalformedPpm, "manifest entry " + std::to_string(i) + ": " + e.what(), i);
      }
    }();
    if (!stream.frames.empty() && !frame.same_dimensions(stream.frames.front())) {
      throw Error(ErrorCode::DimensionMismatch,
                  "manifest entry " + std::to_string(i) + " is " + std::to_string(frame.width()) + "x" +
                      std::to_string(frame.height()) + ", expected " + std::to_string(stream.width()) + "x" +
                      std::to_string(stream.height()),
                  i);
    }
    stream.frames.push_back(std::move(frame));
  }
  if (stream.frames.empty()) throw Error(ErrorCode::Schema, manifest_path.string() + ": manifest is empty");
  return stream;
}

// ---------------------------------------------------------------------------
// Square pad + resize

struct PaddedFrame {
  Frame frame;
  ActiveMask mask;
};

// Pads the shorter side with centered black rows/columns to a square, then
// nearest-neighbour resizes to target x target. Each output pixel samples the
// padded source at its centre.
inline PaddedFrame square_pad_resize(const Frame& frame, std::size_t target,
                                     std::size_t block_size = BlockGrid::kDefaultBlockSize) {
  if (target == 0 || block_size == 0 || target % block_size != 0) {
    throw Error(ErrorCode::Config, "target " + std::to_string(target) + " is not divisible by block size " +
                                       std::to_string(block_size));
  }
  const std::size_t side = std::max(frame.width(), frame.height());
  const std::size_t off_x = (side - frame.width()) / 2;
  const std::size_t off_y = (side - frame.height()) / 2;
  const auto grid = BlockGrid::for_frame(target, target, block_size);

  Frame out(target, target, std::uint8_t{0});
  ActiveMask mask{Grid<std::uint8_t>(grid.cols, grid.rows, 0)};
  auto source_coord = [&](std::size_t d) { return ((2 * d + 1) * side) / (2 * target); };

  for (std::size_t y = 0; y < target; ++y) {
    const std::size_t py = source_coord(y);
    if (py < off_y || py >= off_y + frame.height()) continue;
    for (std::size_t x = 0; x < target; ++x) {
      const std::size_t px = source_coord(x);
      if (px < off_x || px >= off_x + frame.width()) continue;
      for (std::size_t c = 0; c < 3; ++c) out.set_channel(x, y, c, frame.channel(px - off_x, py - off_y, c));
      mask.active.at(x / block_size, y / block_size) = 1;
    }
  }
  return PaddedFrame{std::move(out), std::move(mask)};
}

// ---------------------------------------------------------------------------
// Synthetic streams

struct Rect {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t w = 0;
  std::int64_t h = 0;

  bool contains(std::int64_t px, std::int64_t py) const noexcept {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
  bool inside(std::size_t width, std::size_t height) const noexcept {
    return x >= 0 && y >= 0 && w > 0 && h > 0 && x + w <= static_cast<std::int64_t>(width) &&
           y + h <= static_cast<std::int64_t>(height);
  }
  Rect moved(std::int64_t dx, std::int64_t dy) const noexcept { return Rect{x + dx, y + dy, w, h}; }
};

struct Mover {
  Rect rect;  // position at frame 0
  std::int64_t vx = 0;
  std::int64_t vy = 0;
  int delta = 0;

  Rect at(std::size_t t) const noexcept {
    const auto ti = static_cast<std::int64_t>(t);
    return rect.moved(vx * ti, vy * ti);
  }
};

// Appears at `frame` and persists for the rest of the stream.
struct NovelEvent {
  std::size_t frame = 0;
  Rect rect;
  int delta = 0;
};

// Square wave: +amplitude on odd half-periods.
struct Flicker {
  std::size_t period = 1;
  int amplitude = 0;

  int offset(std::size_t t) const noexcept { return ((t / period) % 2 == 1) ? amplitude : 0; }
};

struct Background {
  enum class Kind { Constant, Textured };
  Kind kind = Kind::Constant;
  std::array<int, 3> rgb{64, 64, 64};
  int texture_amplitude = 0;  // Textured only: per-pixel offset in [-a, a]
};

struct SynthSpec {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t n_frames = 0;
  std::size_t block_size = BlockGrid::kDefaultBlockSize;
  Background background;
  std::vector<Mover> movers;
  std::vector<NovelEvent> novel_events;
  std::optional<Flicker> flicker;
  std::uint64_t seed = 0;
};

// Per transition t (frame t-1 -> t), the exact per-block max-abs channel diff.
struct ChangeTruth {
  BlockGrid grid;
  std::vector<Grid<std::uint8_t>> transitions;
};

inline void validate(const SynthSpec& spec) {
  if (spec.n_frames < 2) throw Error(ErrorCode::InvalidSpec, "n_frames must be >= 2");
  BlockGrid::for_frame(spec.width, spec.height, spec.block_size);
  if (spec.background.texture_amplitude < 0) throw Error(ErrorCode::InvalidSpec, "texture amplitude must be >= 0");
  for (std::size_t i = 0; i < spec.movers.size(); ++i) {
    const auto& m = spec.movers[i];
    for (std::size_t t = 0; t < spec.n_frames; ++t) {
      if (!m.at(t).inside(spec.width, spec.height)) {
        throw Error(ErrorCode::InvalidSpec,
                    "mover " + std::to_string(i) + " leaves the frame at t=" + std::to_string(t), i);
      }
    }
  }
  for (std::size_t i = 0; i < spec.novel_events.size(); ++i) {
    const auto& e = spec.novel_events[i];
    if (e.frame >= spec.n_frames) throw Error(ErrorCode::InvalidSpec, "novel event " + std::to_string(i) + " frame out of range", i);
    if (!e.rect.inside(spec.width, spec.height)) {
      throw Error(ErrorCode::InvalidSpec, "novel event " + std::to_string(i) + " rect outside the frame", i);
    }
  }
  if (spec.flicker && spec.flicker->period == 0) throw Error(ErrorCode::InvalidSpec, "flicker period must be >= 1");
}

namespace detail {

// Evaluates generated pixel values directly from the spec.
class SynthField {
 public:
  explicit SynthField(const SynthSpec& spec) : spec_(spec) {
    if (spec.background.kind == Background::Kind::Textured && spec.background.texture_amplitude > 0) {
      Rng rng(spec.seed);
      const auto amp = spec.background.texture_amplitude;
      texture_.resize(spec.width * spec.height * 3);
      for (auto& v : texture_) v = static_cast<std::int16_t>(rng.uniform_int(-amp, amp));
    }
  }

  std::uint8_t value(std::size_t t, std::size_t x, std::size_t y, std::size_t c) const {
    int v = spec_.background.rgb[c];
    if (!texture_.empty()) v += texture_[(y * spec_.width + x) * 3 + c];
    if (spec_.flicker) v += spec_.flicker->offset(t);
    const auto xi = static_cast<std::int64_t>(x);
    const auto yi = static_cast<std::int64_t>(y);
    for (const auto& m : spec_.movers) {
      if (m.at(t).contains(xi, yi)) v += m.delta;
    }
    for (const auto& e : spec_.novel_events) {
      if (e.frame <= t && e.rect.contains(xi, yi)) v += e.delta;
    }
    return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
  }

 private:
  const SynthSpec& spec_;
  std::vector<std::int16_t> texture_;
};

}  // namespace detail

struct SynthResult {
  FrameStream stream;
  ChangeTruth truth;
};

// Frames are rendered pixel by pixel. The truth is computed separately: only
// pixels inside regions that can change between t-1 and t (mover footprints at
// both times, events appearing at t, the whole frame when flicker toggles) are
// re-evaluated; every other block is zero by construction.
inline SynthResult synth_stream(const SynthSpec& spec) {
  validate(spec);
  const detail::SynthField field(spec);
  const auto grid = BlockGrid::for_frame(spec.width, spec.height, spec.block_size);

  SynthResult result;
  result.stream.source_id = "synth:" + std::to_string(spec.seed);
  for (std::size_t t = 0; t < spec.n_frames; ++t) {
    Frame frame(spec.width, spec.height, std::uint8_t{0});
    for (std::size_t y = 0; y < spec.height; ++y) {
      for (std::size_t x = 0; x < spec.width; ++x) {
        for (std::size_t c = 0; c < 3; ++c) frame.set_channel(x, y, c, field.value(t, x, y, c));
      }
    }
    result.stream.frames.push_back(std::move(frame));
  }

  result.truth.grid = grid;
  const Rect whole{0, 0, static_cast<std::int64_t>(spec.width), static_cast<std::int64_t>(spec.height)};
  for (std::size_t t = 1; t < spec.n_frames; ++t) {
    std::vector<Rect> dirty;
    if (spec.flicker && spec.flicker->offset(t) != spec.flicker->offset(t - 1)) {
      dirty.push_back(whole);
    } else {
      for (const auto& m : spec.movers) {
        dirty.push_back(m.at(t - 1));
        dirty.push_back(m.at(t));
      }
      for (const auto& e : spec.novel_events) {
        if (e.frame == t) dirty.push_back(e.rect);
      }
    }
    Grid<std::uint8_t> change(grid.cols, grid.rows, 0);
    for (const auto& r : dirty) {
      for (auto y = r.y; y < r.y + r.h; ++y) {
        for (auto x = r.x; x < r.x + r.w; ++x) {
          const auto ux = static_cast<std::size_t>(x);
          const auto uy = static_cast<std::size_t>(y);
          auto& cell = change.at(ux / grid.block_size, uy / grid.block_size);
          for (std::size_t c = 0; c < 3; ++c) {
            const int d = std::abs(int{field.value(t, ux, uy, c)} - int{field.value(t - 1, ux, uy, c)});
            cell = std::max(cell, static_cast<std::uint8_t>(d));
          }
        }
      }
    }
    result.truth.transitions.push_back(std::move(change));
  }
  return result;
}

// ---------------------------------------------------------------------------
// JSON

inline Rect rect_from_json(const Json& j, const std::string& where) {
  return Rect{require<std::int64_t>(j, "x", where), require<std::int64_t>(j, "y", where),
              require<std::int64_t>(j, "w", where), require<std::int64_t>(j, "h", where)};
}

inline Json rect_to_json(const Rect& r) { return Json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }

inline SynthSpec synth_spec_from_json(const Json& j) {
  const std::string where = "synth spec";
  SynthSpec spec;
  spec.width = require<std::size_t>(j, "width", where);
  spec.height = require<std::size_t>(j, "height", where);
  spec.n_frames = require<std::size_t>(j, "n_frames", where);
  spec.block_size = optional_field<std::size_t>(j, "block_size", BlockGrid::kDefaultBlockSize, where);
  spec.seed = optional_field<std::uint64_t>(j, "seed", 0, where);
  if (j.contains("background")) {
    const auto& bg = j.at("background");
    const auto kind = optional_field<std::string>(bg, "kind", "constant", where + ".background");
    if (kind == "constant") {
      spec.background.kind = Background::Kind::Constant;
    } else if (kind == "textured") {
      spec.background.kind = Background::Kind::Textured;
    } else {
      throw Error(ErrorCode::Schema, where + ".background.kind must be constant|textured");
    }
    spec.background.rgb = optional_field<std::array<int, 3>>(bg, "rgb", spec.background.rgb, where + ".background");
    spec.background.texture_amplitude = optional_field<int>(bg, "texture_amplitude", 0, where + ".background");
  }
  for (const auto& m : j.value("movers", Json::array())) {
    Mover mover;
    mover.rect = rect_from_json(m.at("rect"), where + ".movers");
    mover.vx = optional_field<std::int64_t>(m, "vx", 0, where + ".movers");
    mover.vy = optional_field<std::int64_t>(m, "vy", 0, where + ".movers");
    mover.delta = require<int>(m, "delta", where + ".movers");
    spec.movers.push_back(mover);
  }
  for (const auto& e : j.value("novel_events", Json::array())) {
    spec.novel_events.push_back(NovelEvent{require<std::size_t>(e, "frame", where + ".novel_events"),
                                           rect_from_json(e.at("rect"), where + ".novel_events"),
                                           require<int>(e, "delta", where + ".novel_events")});
  }
  if (j.contains("flicker") && !j.at("flicker").is_null()) {
    const auto& f = j.at("flicker");
    spec.flicker = Flicker{require<std::size_t>(f, "period", where + ".flicker"),
                           require<int>(f, "amplitude", where + ".flicker")};
  }
  return spec;
}

inline Json synth_spec_to_json(const SynthSpec& spec) {
  Json j{{"width", spec.width}, {"height", spec.height}, {"n_frames", spec.n_frames},
         {"block_size", spec.block_size}, {"seed", spec.seed}};
  j["background"] = Json{{"kind", spec.background.kind == Background::Kind::Textured ? "textured" : "constant"},
                         {"rgb", spec.background.rgb},
                         {"texture_amplitude", spec.background.texture_amplitude}};
  j["movers"] = Json::array();
  for (const auto& m : spec.movers) {
    j["movers"].push_back(Json{{"rect", rect_to_json(m.rect)}, {"vx", m.vx}, {"vy", m.vy}, {"delta", m.delta}});
  }
  j["novel_events"] = Json::array();
  for (const auto& e : spec.novel_events) {
    j["novel_events"].push_back(Json{{"frame", e.frame}, {"rect", rect_to_json(e.rect)}, {"delta", e.delta}});
  }
  j["flicker"] = spec.flicker ? Json{{"period", spec.flicker->period}, {"amplitude", spec.flicker->amplitude}} : Json();
  return j;
}

inline Json truth_to_json(const ChangeTruth& truth) {
  Json transitions = Json::array();
  for (const auto& g : truth.transitions) transitions.push_back(g.cells);
  return Json{{"block_size", truth.grid.block_size},
              {"cols", truth.grid.cols},
              {"rows", truth.grid.rows},
              {"transitions", std::move(transitions)}};
}

inline ChangeTruth truth_from_json(const Json& j) {
  const std::string where = "truth";
  ChangeTruth truth;
  truth.grid = BlockGrid{require<std::size_t>(j, "block_size", where), require<std::size_t>(j, "cols", where),
                         require<std::size_t>(j, "rows", where)};
  for (const auto& cells : require<std::vector<std::vector<std::uint8_t>>>(j, "transitions", where)) {
    if (cells.size() != truth.grid.block_count()) throw Error(ErrorCode::Schema, "truth transition has wrong cell count");
    Grid<std::uint8_t> g(truth.grid.cols, truth.grid.rows);
    g.cells = cells;
    truth.transitions.push_back(std::move(g));
  }
  return truth;
}

// Writes frame_NNNN.ppm, manifest.json and truth.json into `dir`.
inline void write_synth_dir(const std::filesystem::path& dir, const SynthResult& result) {
  std::filesystem::create_directories(dir);
  Json manifest = Json::array();
  for (std::size_t i = 0; i < result.stream.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.ppm", i);
    write_ppm(dir / name, result.stream.frames[i]);
    manifest.push_back(name);
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text_file(dir / "truth.json", truth_to_json(result.truth).dump() + "\n");
}

}  // namespace reuselab::framestream

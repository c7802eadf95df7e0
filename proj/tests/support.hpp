#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "reuselab/framestream.hpp"
#include "reuselab/grid.hpp"
#include "reuselab/rng.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using reuselab::framestream::Frame;

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("reuselab-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Independent block-diff oracle: walks blocks first, then the pixels inside
// each block, so it shares no loop structure with planner::block_scores.
inline reuselab::Grid<int> brute_force_scores(const Frame& a, const Frame& b, std::size_t block) {
  reuselab::Grid<int> out(a.width() / block, a.height() / block, 0);
  for (std::size_t by = 0; by < out.rows; ++by) {
    for (std::size_t bx = 0; bx < out.cols; ++bx) {
      int best = 0;
      for (std::size_t y = by * block; y < (by + 1) * block; ++y) {
        for (std::size_t x = bx * block; x < (bx + 1) * block; ++x) {
          for (std::size_t c = 0; c < 3; ++c) {
            const int d = std::abs(int(a.channel(x, y, c)) - int(b.channel(x, y, c)));
            best = std::max(best, d);
          }
        }
      }
      out.at(bx, by) = best;
    }
  }
  return out;
}

// Random but always-valid synth spec: frame sides are multiples of the block
// size up to max_side, movers stay in bounds for the whole stream.
inline reuselab::framestream::SynthSpec random_spec(reuselab::Rng& rng, std::size_t max_side = 560,
                                                    std::size_t max_frames = 16) {
  using namespace reuselab::framestream;
  SynthSpec spec;
  spec.block_size = 28;
  const auto max_blocks = static_cast<std::int64_t>(max_side / spec.block_size);
  spec.width = static_cast<std::size_t>(rng.uniform_int(1, max_blocks)) * spec.block_size;
  spec.height = static_cast<std::size_t>(rng.uniform_int(1, max_blocks)) * spec.block_size;
  spec.n_frames = static_cast<std::size_t>(rng.uniform_int(2, static_cast<std::int64_t>(max_frames)));
  spec.seed = rng.next_u64();
  spec.background.kind = rng.bernoulli(0.5) ? Background::Kind::Textured : Background::Kind::Constant;
  spec.background.rgb = {static_cast<int>(rng.uniform_int(0, 255)), static_cast<int>(rng.uniform_int(0, 255)),
                         static_cast<int>(rng.uniform_int(0, 255))};
  spec.background.texture_amplitude = static_cast<int>(rng.uniform_int(0, 20));

  const auto W = static_cast<std::int64_t>(spec.width);
  const auto H = static_cast<std::int64_t>(spec.height);
  const auto T = static_cast<std::int64_t>(spec.n_frames) - 1;
  const auto n_movers = rng.uniform_int(0, 3);
  for (std::int64_t i = 0; i < n_movers; ++i) {
    Mover m;
    m.rect.w = rng.uniform_int(1, std::max<std::int64_t>(1, W / 3));
    m.rect.h = rng.uniform_int(1, std::max<std::int64_t>(1, H / 3));
    const auto max_vx = T > 0 ? (W - m.rect.w) / T : 0;
    const auto max_vy = T > 0 ? (H - m.rect.h) / T : 0;
    m.vx = rng.uniform_int(-std::min<std::int64_t>(max_vx, 40), std::min<std::int64_t>(max_vx, 40));
    m.vy = rng.uniform_int(-std::min<std::int64_t>(max_vy, 40), std::min<std::int64_t>(max_vy, 40));
    // Choose the start so both the first and the last position are inside.
    const auto lo_x = std::max<std::int64_t>(0, -m.vx * T);
    const auto hi_x = std::min<std::int64_t>(W - m.rect.w, W - m.rect.w - m.vx * T);
    const auto lo_y = std::max<std::int64_t>(0, -m.vy * T);
    const auto hi_y = std::min<std::int64_t>(H - m.rect.h, H - m.rect.h - m.vy * T);
    m.rect.x = rng.uniform_int(lo_x, hi_x);
    m.rect.y = rng.uniform_int(lo_y, hi_y);
    m.delta = static_cast<int>(rng.uniform_int(-200, 200));
    spec.movers.push_back(m);
  }
  const auto n_events = rng.uniform_int(0, 2);
  for (std::int64_t i = 0; i < n_events; ++i) {
    NovelEvent e;
    e.frame = static_cast<std::size_t>(rng.uniform_int(0, T));
    e.rect.w = rng.uniform_int(1, W);
    e.rect.h = rng.uniform_int(1, H);
    e.rect.x = rng.uniform_int(0, W - e.rect.w);
    e.rect.y = rng.uniform_int(0, H - e.rect.h);
    e.delta = static_cast<int>(rng.uniform_int(-255, 255));
    spec.novel_events.push_back(e);
  }
  if (rng.bernoulli(0.3)) {
    spec.flicker = Flicker{static_cast<std::size_t>(rng.uniform_int(1, 4)), static_cast<int>(rng.uniform_int(-30, 30))};
  }
  return spec;
}

}  // namespace testsupport

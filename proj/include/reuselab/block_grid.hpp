#pragma once

#include <cstddef>
#include <string>

#include "reuselab/error.hpp"

namespace reuselab {

// Planner block geometry over a (padded) frame. The default 28px block
// approximates a merged-token grid on 560px frames.
struct BlockGrid {
  static constexpr std::size_t kDefaultBlockSize = 28;

  std::size_t block_size = kDefaultBlockSize;
  std::size_t cols = 0;
  std::size_t rows = 0;

  static BlockGrid for_frame(std::size_t width, std::size_t height,
                             std::size_t block_size = kDefaultBlockSize) {
    if (block_size == 0) throw Error(ErrorCode::Config, "block size must be positive");
    if (width == 0 || height == 0 || width % block_size != 0 || height % block_size != 0) {
      throw Error(ErrorCode::Config, "block size " + std::to_string(block_size) +
                                         " does not divide frame " + std::to_string(width) + "x" +
                                         std::to_string(height));
    }
    return BlockGrid{block_size, width / block_size, height / block_size};
  }

  std::size_t block_count() const noexcept { return cols * rows; }
  std::size_t width() const noexcept { return cols * block_size; }
  std::size_t height() const noexcept { return rows * block_size; }

  bool operator==(const BlockGrid&) const = default;
};

}  // namespace reuselab

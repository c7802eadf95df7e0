#pragma once

#include <cstddef>
#include <vector>

#include "reuselab/error.hpp"

namespace reuselab {

// Dense row-major 2-D array of per-block values.
template <typename T>
struct Grid {
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::vector<T> cells;

  Grid() = default;
  Grid(std::size_t c, std::size_t r, T fill = T{}) : cols(c), rows(r), cells(c * r, fill) {}

  std::size_t size() const noexcept { return cells.size(); }

  T& at(std::size_t col, std::size_t row) { return cells[row * cols + col]; }
  const T& at(std::size_t col, std::size_t row) const { return cells[row * cols + col]; }

  T& operator[](std::size_t i) { return cells[i]; }
  const T& operator[](std::size_t i) const { return cells[i]; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return cols == other.cols && rows == other.rows;
  }

  bool operator==(const Grid&) const = default;
};

template <typename T, typename U>
void require_same_shape(const Grid<T>& a, const Grid<U>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": grid shapes differ");
  }
}

}  // namespace reuselab

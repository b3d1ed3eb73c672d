#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rmloc {

// Execution policy for the hot kernels. Every parallel kernel has a serial
// twin producing bit-identical output; tests and the benchmark compare them.
enum class Exec { serial, parallel };

struct GridGeometry {
  int width = 0;
  int height = 0;
  double cell_size = 1.0;  // meters per cell

  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
  bool contains(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  void validate() const;  // throws ConfigError on broken invariants

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Row-major linear index, origin at the top-left.
inline std::size_t cell_index(const GridGeometry& g, Cell c) {
  return static_cast<std::size_t>(c.y) * g.width + c.x;
}

// Set of grid cells, one membership flag per cell.
class CellSet {
 public:
  explicit CellSet(GridGeometry geometry);

  static CellSet full(GridGeometry geometry);

  const GridGeometry& geometry() const { return geometry_; }
  bool contains(Cell c) const { return member_[cell_index(geometry_, c)] != 0; }
  void insert(Cell c);
  void erase(Cell c);
  std::size_t count() const { return count_; }
  bool empty() const { return count_ == 0; }

  // Member cells in row-major order.
  std::vector<Cell> cells() const;

  bool is_subset_of(const CellSet& other) const;

  friend bool operator==(const CellSet&, const CellSet&) = default;

 private:
  GridGeometry geometry_;
  std::vector<uint8_t> member_;
  std::size_t count_ = 0;
};

// The centered window_width x window_height block of the grid. Offsets are
// floor((grid - window) / 2) on each axis.
CellSet window_mask(const GridGeometry& geometry, int window_width,
                    int window_height);

}  // namespace rmloc

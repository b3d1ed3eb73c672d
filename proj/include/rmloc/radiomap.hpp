#pragma once

#include <cstdint>
#include <vector>

#include "rmloc/geometry.hpp"

namespace rmloc {

// Per-Tx grid of 8-bit RSS grey levels. 0 means below the noise floor
// (no coverage); 255 is the strongest value.
class RadioMap {
 public:
  RadioMap(GridGeometry geometry, std::vector<uint8_t> values);

  const GridGeometry& geometry() const { return geometry_; }
  uint8_t at(Cell c) const;  // range-checked
  const std::vector<uint8_t>& values() const { return values_; }
  const uint8_t* data() const { return values_.data(); }

  friend bool operator==(const RadioMap&, const RadioMap&) = default;

 private:
  GridGeometry geometry_;
  std::vector<uint8_t> values_;
};

// Fingerprint database: one RadioMap per Tx over a common raster.
// Tx IDs are the indices 0..tx_count()-1.
struct RadioMapSet {
  GridGeometry geometry;
  std::vector<Cell> tx_positions;
  std::vector<RadioMap> maps;

  int tx_count() const { return static_cast<int>(maps.size()); }
  void validate() const;  // throws FormatError on broken invariants

  friend bool operator==(const RadioMapSet&, const RadioMapSet&) = default;
};

// Stored grey level of Tx `tx` at `cell`. Throws std::out_of_range when
// either index is invalid.
uint8_t rss_at(const RadioMapSet& set, int tx, Cell cell);

// Number of Tx with positive RSS at `cell`.
int coverage_count(const RadioMapSet& set, Cell cell);

// Up to `k` Tx IDs with positive RSS at `cell`, strongest first; equal
// values are ordered by ascending Tx ID. Fewer than `k` entries are
// returned when coverage is insufficient.
std::vector<int> strongest_tx_at(const RadioMapSet& set, Cell cell, int k);

}  // namespace rmloc

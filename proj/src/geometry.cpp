#include "rmloc/geometry.hpp"

#include <string>

#include "rmloc/errors.hpp"

namespace rmloc {

void GridGeometry::validate() const {
  if (width < 1 || height < 1)
    throw ConfigError("grid geometry: width and height must be >= 1, got " +
                      std::to_string(width) + "x" + std::to_string(height));
  if (!(cell_size > 0.0))
    throw ConfigError("grid geometry: cell_size must be positive");
}

CellSet::CellSet(GridGeometry geometry) : geometry_(geometry) {
  geometry_.validate();
  member_.assign(geometry_.size(), 0);
}

CellSet CellSet::full(GridGeometry geometry) {
  CellSet s(geometry);
  s.member_.assign(s.member_.size(), 1);
  s.count_ = s.member_.size();
  return s;
}

void CellSet::insert(Cell c) {
  if (!geometry_.contains(c.x, c.y))
    throw std::out_of_range("CellSet::insert: cell outside geometry");
  uint8_t& m = member_[cell_index(geometry_, c)];
  if (!m) {
    m = 1;
    ++count_;
  }
}

void CellSet::erase(Cell c) {
  if (!geometry_.contains(c.x, c.y))
    throw std::out_of_range("CellSet::erase: cell outside geometry");
  uint8_t& m = member_[cell_index(geometry_, c)];
  if (m) {
    m = 0;
    --count_;
  }
}

std::vector<Cell> CellSet::cells() const {
  std::vector<Cell> out;
  out.reserve(count_);
  std::size_t i = 0;
  for (int y = 0; y < geometry_.height; ++y)
    for (int x = 0; x < geometry_.width; ++x, ++i)
      if (member_[i]) out.push_back({x, y});
  return out;
}

bool CellSet::is_subset_of(const CellSet& other) const {
  if (geometry_ != other.geometry_) return false;
  for (std::size_t i = 0; i < member_.size(); ++i)
    if (member_[i] && !other.member_[i]) return false;
  return true;
}

CellSet window_mask(const GridGeometry& geometry, int window_width,
                    int window_height) {
  geometry.validate();
  if (window_width < 1 || window_height < 1)
    throw ConfigError("window_mask: window dimensions must be >= 1");
  if (window_width > geometry.width || window_height > geometry.height)
    throw ConfigError("window_mask: window larger than grid");
  const int x0 = (geometry.width - window_width) / 2;
  const int y0 = (geometry.height - window_height) / 2;
  CellSet s(geometry);
  for (int y = y0; y < y0 + window_height; ++y)
    for (int x = x0; x < x0 + window_width; ++x) s.insert({x, y});
  return s;
}

}  // namespace rmloc

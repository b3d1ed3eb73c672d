#include "rmloc/radiomap.hpp"

#include <algorithm>
#include <string>

#include "rmloc/errors.hpp"

namespace rmloc {

RadioMap::RadioMap(GridGeometry geometry, std::vector<uint8_t> values)
    : geometry_(geometry), values_(std::move(values)) {
  geometry_.validate();
  if (values_.size() != geometry_.size())
    throw FormatError("radio map: expected " + std::to_string(geometry_.size()) +
                      " values, got " + std::to_string(values_.size()));
}

uint8_t RadioMap::at(Cell c) const {
  if (!geometry_.contains(c.x, c.y))
    throw std::out_of_range("RadioMap::at: cell (" + std::to_string(c.x) + "," +
                            std::to_string(c.y) + ") outside grid");
  return values_[cell_index(geometry_, c)];
}

void RadioMapSet::validate() const {
  geometry.validate();
  if (tx_positions.size() != maps.size())
    throw FormatError("radio map set: " + std::to_string(tx_positions.size()) +
                      " tx positions but " + std::to_string(maps.size()) +
                      " planes");
  for (const RadioMap& m : maps)
    if (m.geometry() != geometry)
      throw FormatError("radio map set: plane geometry differs from set geometry");
  for (const Cell& tx : tx_positions)
    if (!geometry.contains(tx.x, tx.y))
      throw FormatError("radio map set: tx position outside grid");
}

uint8_t rss_at(const RadioMapSet& set, int tx, Cell cell) {
  if (tx < 0 || tx >= set.tx_count())
    throw std::out_of_range("rss_at: tx id " + std::to_string(tx) +
                            " out of range [0," +
                            std::to_string(set.tx_count()) + ")");
  return set.maps[tx].at(cell);
}

int coverage_count(const RadioMapSet& set, Cell cell) {
  if (!set.geometry.contains(cell.x, cell.y))
    throw std::out_of_range("coverage_count: cell outside grid");
  const std::size_t idx = cell_index(set.geometry, cell);
  int n = 0;
  for (const RadioMap& m : set.maps) n += m.data()[idx] > 0;
  return n;
}

std::vector<int> strongest_tx_at(const RadioMapSet& set, Cell cell, int k) {
  if (k < 1) throw std::invalid_argument("strongest_tx_at: k must be >= 1");
  if (!set.geometry.contains(cell.x, cell.y))
    throw std::out_of_range("strongest_tx_at: cell outside grid");
  const std::size_t idx = cell_index(set.geometry, cell);
  std::vector<std::pair<int, int>> positive;  // (value, tx id)
  positive.reserve(set.maps.size());
  for (int tx = 0; tx < set.tx_count(); ++tx) {
    const int v = set.maps[tx].data()[idx];
    if (v > 0) positive.emplace_back(v, tx);
  }
  std::sort(positive.begin(), positive.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (static_cast<int>(positive.size()) > k) positive.resize(k);
  std::vector<int> ids;
  ids.reserve(positive.size());
  for (const auto& [v, tx] : positive) ids.push_back(tx);
  return ids;
}

}  // namespace rmloc

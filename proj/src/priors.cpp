#include "rmloc/priors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rmloc/errors.hpp"

namespace rmloc {

Prior::Prior(GridGeometry geometry, std::vector<Cell> support_cells,
             std::vector<double> mass)
    : geometry_(geometry),
      cells_(std::move(support_cells)),
      mass_(std::move(mass)) {
  geometry_.validate();
  if (cells_.empty()) throw InfeasibleError("prior: empty support");
  if (cells_.size() != mass_.size())
    throw ConfigError("prior: support and mass lengths differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < mass_.size(); ++i) {
    if (!(mass_[i] > 0.0))
      throw ConfigError("prior: every support cell needs positive mass");
    if (!geometry_.contains(cells_[i].x, cells_[i].y))
      throw std::out_of_range("prior: support cell outside grid");
    sum += mass_[i];
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw ConfigError("prior: mass sums to " + std::to_string(sum) +
                      ", expected 1");
}

CellSet Prior::support() const {
  CellSet s(geometry_);
  for (const Cell& c : cells_) s.insert(c);
  return s;
}

Prior uniform_prior(const CellSet& cells) {
  if (cells.empty()) throw InfeasibleError("uniform_prior: empty cell set");
  std::vector<Cell> support = cells.cells();
  const double p = 1.0 / static_cast<double>(support.size());
  return Prior(cells.geometry(), std::move(support),
               std::vector<double>(cells.count(), p));
}

Prior window_prior(const GridGeometry& geometry, int w, int h) {
  return uniform_prior(window_mask(geometry, w, h));
}

Prior perfect_prior_random(const RadioMapSet& ref_maps, const CellSet& window,
                           int n_tx) {
  if (window.geometry() != ref_maps.geometry)
    throw ConfigError("perfect_prior_random: window geometry differs from maps");
  CellSet support(ref_maps.geometry);
  for (const Cell& c : window.cells())
    if (coverage_count(ref_maps, c) >= n_tx) support.insert(c);
  if (support.empty())
    throw InfeasibleError("perfect_prior_random: no cell has positive RSS on " +
                          std::to_string(n_tx) + " maps inside the window");
  return uniform_prior(support);
}

Prior perfect_prior_strongest(const RadioMapSet& ref_maps,
                              const CellSet& window,
                              const std::vector<int>& tx_ids) {
  if (tx_ids.empty())
    throw ConfigError("perfect_prior_strongest: tx_ids must be nonempty");
  if (window.geometry() != ref_maps.geometry)
    throw ConfigError("perfect_prior_strongest: window geometry differs from maps");
  const int k = static_cast<int>(tx_ids.size());
  CellSet support(ref_maps.geometry);
  for (const Cell& c : window.cells())
    if (strongest_tx_at(ref_maps, c, k) == tx_ids) support.insert(c);
  if (support.empty())
    throw InfeasibleError("perfect_prior_strongest: no cell matches the ordered strongest list");
  return uniform_prior(support);
}

Prior approx_prior_strongest(const RadioMapSet& est_maps,
                             const CellSet& window,
                             const std::vector<int>& tx_ids) {
  if (tx_ids.empty())
    throw ConfigError("approx_prior_strongest: tx_ids must be nonempty");
  if (window.geometry() != est_maps.geometry)
    throw ConfigError("approx_prior_strongest: window geometry differs from maps");
  const int k = static_cast<int>(tx_ids.size());
  std::vector<int> wanted = tx_ids;
  std::sort(wanted.begin(), wanted.end());
  CellSet support(est_maps.geometry);
  for (const Cell& c : window.cells()) {
    std::vector<int> top = strongest_tx_at(est_maps, c, k);
    if (static_cast<int>(top.size()) != k) continue;
    std::sort(top.begin(), top.end());
    if (top == wanted) support.insert(c);
  }
  // Dense deployments rarely leave the match empty; sparse desk-scale maps
  // can, so widen to the next-weakest prior in the hierarchy.
  if (support.empty()) return uniform_prior(window);
  return uniform_prior(support);
}

}  // namespace rmloc

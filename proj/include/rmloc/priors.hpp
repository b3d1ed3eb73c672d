#pragma once

#include <vector>

#include "rmloc/radiomap.hpp"

namespace rmloc {

// Probability mass over grid cells with an explicit support set. Estimators
// iterate the support only, which is the main performance lever for the
// strongest-Tx priors whose support is tiny. All masses are positive and
// sum to 1 within 1e-12.
class Prior {
 public:
  Prior(GridGeometry geometry, std::vector<Cell> support_cells,
        std::vector<double> mass);

  const GridGeometry& geometry() const { return geometry_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<double>& mass() const { return mass_; }
  std::size_t size() const { return cells_.size(); }

  CellSet support() const;

 private:
  GridGeometry geometry_;
  std::vector<Cell> cells_;  // row-major order
  std::vector<double> mass_;
};

// Mass 1/|cells| on each member. Throws InfeasibleError on an empty set.
Prior uniform_prior(const CellSet& cells);

// Uniform over the centered w x h window.
Prior window_prior(const GridGeometry& geometry, int w, int h);

// Uniform over window cells with positive RSS on at least n_tx planes of
// ref_maps (the measurement-side maps).
Prior perfect_prior_random(const RadioMapSet& ref_maps, const CellSet& window,
                           int n_tx);

// Uniform over window cells whose ordered strongest-Tx list on ref_maps
// equals tx_ids exactly. ref_maps must be the measurement-side maps; this is
// the unrealistic "perfect" prior.
Prior perfect_prior_strongest(const RadioMapSet& ref_maps,
                              const CellSet& window,
                              const std::vector<int>& tx_ids);

// Uniform over window cells whose strongest-Tx *set* on the estimated maps
// equals tx_ids as an unordered set. Falls back to the window prior when no
// cell matches, so the result is never empty.
Prior approx_prior_strongest(const RadioMapSet& est_maps,
                             const CellSet& window,
                             const std::vector<int>& tx_ids);

}  // namespace rmloc

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rmloc/radiomap.hpp"

namespace rmloc {

enum class Occupancy : uint8_t { free_cell = 0, building = 1, car = 2 };

struct EnvironmentMap {
  GridGeometry geometry;
  std::vector<Occupancy> occupancy;  // row-major, one label per cell

  Occupancy at(Cell c) const { return occupancy[cell_index(geometry, c)]; }

  friend bool operator==(const EnvironmentMap&, const EnvironmentMap&) = default;
};

// Knobs of the dominant-path-style surrogate simulator. Penalties are grey
// levels per obstacle cell a path traverses.
struct PropagationParams {
  double ref_level = 170.0;    // grey level at the Tx cell, (0, 255]
  double exponent = 36.0;      // grey levels per doubling of path length
  double wall_penalty = 25.0;  // per building cell entered
  double car_penalty = 0.0;    // per car cell entered
  double noise_floor = 0.0;    // values below this are stored as 0

  void validate() const;
};

struct CityGenParams {
  uint64_t seed = 1;
  int width = 64;
  int height = 64;
  double cell_size = 1.0;
  int block_size = 7;              // nominal building-block side, cells
  double building_density = 0.5;   // probability a block holds a building
  int street_width = 2;            // cells between blocks
  int tx_count = 20;
  int tx_inner_square = 40;        // side of the central Tx placement region
  int tx_min_separation = 6;       // cells, pairwise Euclidean

  void validate() const;
};

// Procedural city: axis-aligned building blocks separated by streets, plus
// Tx positions rejection-sampled on free cells of the central inner square
// at the required pairwise separation. Deterministic given the seed; throws
// InfeasibleError when placement fails within the attempt budget.
std::pair<EnvironmentMap, std::vector<Cell>> generate_environment(
    const CityGenParams& params);

// Dominant-path surrogate. Each cell's attenuation is the minimum over
// 8-connected paths from the Tx of
//
//   exponent * log2(1 + path_length_m) + sum of per-cell obstacle penalties
//
// and its value is round(ref_level - attenuation) clamped to [0, 255], set
// to 0 below noise_floor. The Tx cell itself carries ref_level. Minimizing
// the attenuation itself (via Pareto labels over length/penalty splits)
// rather than a raw length+penalty scalar keeps the output monotone under
// added obstacles.
RadioMap simulate_pathloss(const EnvironmentMap& env, Cell tx,
                           const PropagationParams& params);

// One plane per Tx; planes are independent and run in parallel under
// Exec::parallel with output identical to the serial path.
RadioMapSet simulate_radio_map_set(const EnvironmentMap& env,
                                   const std::vector<Cell>& tx_positions,
                                   const PropagationParams& params,
                                   Exec exec = Exec::parallel);

// Each free cell independently becomes a car cell with probability
// car_density; buildings are untouched. Deterministic given the seed.
EnvironmentMap perturb_with_cars(const EnvironmentMap& env, uint64_t seed,
                                 double car_density);

struct ScenarioMaps {
  RadioMapSet estimated;
  RadioMapSet measured;
};

// Estimated maps simulated on the clean environment with est_params;
// measured maps on the car-perturbed environment with meas_params. Tx cells
// are kept car-free so both simulations share valid Tx positions.
ScenarioMaps generate_scenario_maps(const CityGenParams& params,
                                    const PropagationParams& est_params,
                                    const PropagationParams& meas_params,
                                    double car_density,
                                    Exec exec = Exec::parallel);

}  // namespace rmloc

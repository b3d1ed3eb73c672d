#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rmloc/radiomap.hpp"
#include "rmloc/synthgen.hpp"

namespace testutil {

inline rmloc::RadioMapSet make_set(int w, int h,
                                   std::vector<std::vector<uint8_t>> planes,
                                   std::vector<rmloc::Cell> txs) {
  rmloc::RadioMapSet set;
  set.geometry = rmloc::GridGeometry{w, h, 1.0};
  set.tx_positions = std::move(txs);
  for (auto& p : planes) set.maps.emplace_back(set.geometry, std::move(p));
  set.validate();
  return set;
}

inline std::filesystem::path tmp_dir() {
  const auto dir = std::filesystem::current_path() / "test_tmp";
  std::filesystem::create_directories(dir);
  return dir;
}

inline rmloc::EnvironmentMap free_env(int w, int h) {
  rmloc::EnvironmentMap env;
  env.geometry = rmloc::GridGeometry{w, h, 1.0};
  env.occupancy.assign(env.geometry.size(), rmloc::Occupancy::free_cell);
  return env;
}

// Small city used across tests; cheap to simulate but structured enough to
// leave shadowed cells.
inline rmloc::CityGenParams desk_city(uint64_t seed) {
  rmloc::CityGenParams c;
  c.seed = seed;
  c.width = 64;
  c.height = 64;
  c.block_size = 6;
  c.building_density = 0.45;
  c.street_width = 3;
  c.tx_count = 20;
  c.tx_inner_square = 40;
  c.tx_min_separation = 6;
  return c;
}

// Opaque buildings (one wall drops the signal below the floor) so that
// coverage is street-shaped: block interiors form scattered dead pockets
// and the coverage-count priors separate cleanly from the window prior.
inline rmloc::PropagationParams desk_propagation() {
  rmloc::PropagationParams p;
  p.ref_level = 170.0;
  p.exponent = 33.0;
  p.wall_penalty = 100.0;
  p.car_penalty = 0.0;
  p.noise_floor = 0.0;
  return p;
}

// Measurement-side surrogate: identical propagation plus random cars that
// cost 45 grey levels per crossing. The mismatch law is a spike at zero
// with a discrete negative tail, structured and location-dependent; a
// smooth exponent shift instead would be fit too well by the gaussian
// model and bury the histogram's advantage.
inline rmloc::PropagationParams desk_measurement_propagation() {
  rmloc::PropagationParams p = desk_propagation();
  p.car_penalty = 45.0;
  return p;
}

constexpr double kDeskCarDensity = 0.05;

}  // namespace testutil

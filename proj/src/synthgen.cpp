#include "rmloc/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "rmloc/errors.hpp"
#include "rmloc/rng.hpp"

namespace rmloc {

void PropagationParams::validate() const {
  if (!(ref_level > 0.0) || ref_level > 255.0)
    throw ConfigError("propagation: ref_level must be in (0, 255]");
  if (exponent < 0.0 || wall_penalty < 0.0 || car_penalty < 0.0)
    throw ConfigError("propagation: exponent and penalties must be >= 0");
  if (noise_floor < 0.0 || noise_floor >= 255.0)
    throw ConfigError("propagation: noise_floor must be in [0, 255)");
}

void CityGenParams::validate() const {
  GridGeometry{width, height, cell_size}.validate();
  if (block_size < 1) throw ConfigError("citygen: block_size must be >= 1");
  if (building_density < 0.0 || building_density > 1.0)
    throw ConfigError("citygen: building_density must be in [0, 1]");
  if (street_width < 1) throw ConfigError("citygen: street_width must be >= 1");
  if (tx_count < 1) throw ConfigError("citygen: tx_count must be >= 1");
  if (tx_inner_square < 1 || tx_inner_square > std::min(width, height))
    throw ConfigError("citygen: tx_inner_square must fit inside the grid");
  if (tx_min_separation < 0)
    throw ConfigError("citygen: tx_min_separation must be >= 0");
}

namespace {

// Distinct RNG streams per generator stage.
constexpr uint64_t kBlockStream = 0x626C6B73;  // block layout
constexpr uint64_t kTxStream = 0x74787073;     // tx placement
constexpr uint64_t kCarStream = 0x63617273;    // car perturbation

void fill_buildings(EnvironmentMap& env, const CityGenParams& p, Rng& rng) {
  const int pitch = p.block_size + p.street_width;
  for (int by = 0; by < p.height; by += pitch) {
    for (int bx = 0; bx < p.width; bx += pitch) {
      const bool build = rng.bernoulli(p.building_density);
      // Jitter shrinks the footprint by 0-1 cells per side so block faces
      // do not align into one long wall.
      const int inset_l = static_cast<int>(rng.uniform_below(2));
      const int inset_t = static_cast<int>(rng.uniform_below(2));
      const int inset_r = static_cast<int>(rng.uniform_below(2));
      const int inset_b = static_cast<int>(rng.uniform_below(2));
      if (!build) continue;
      const int x0 = bx + inset_l;
      const int y0 = by + inset_t;
      const int x1 = std::min(bx + p.block_size - inset_r, p.width);
      const int y1 = std::min(by + p.block_size - inset_b, p.height);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
          env.occupancy[cell_index(env.geometry, {x, y})] = Occupancy::building;
    }
  }
}

std::vector<Cell> place_tx(const EnvironmentMap& env, const CityGenParams& p,
                           Rng& rng) {
  const CellSet inner = window_mask(env.geometry, p.tx_inner_square, p.tx_inner_square);
  std::vector<Cell> free_inner;
  for (const Cell& c : inner.cells())
    if (env.at(c) == Occupancy::free_cell) free_inner.push_back(c);
  if (static_cast<int>(free_inner.size()) < p.tx_count)
    throw InfeasibleError("tx placement: only " + std::to_string(free_inner.size()) +
                          " free cells in the inner square for " +
                          std::to_string(p.tx_count) + " tx");

  const double min_sep2 =
      static_cast<double>(p.tx_min_separation) * p.tx_min_separation;
  const int max_restarts = 64;
  const int attempts_per_tx = 256;
  for (int restart = 0; restart < max_restarts; ++restart) {
    std::vector<Cell> placed;
    placed.reserve(p.tx_count);
    bool failed = false;
    for (int t = 0; t < p.tx_count && !failed; ++t) {
      bool found = false;
      for (int a = 0; a < attempts_per_tx; ++a) {
        const Cell cand = free_inner[rng.uniform_below(free_inner.size())];
        bool ok = true;
        for (const Cell& q : placed) {
          const double dx = cand.x - q.x, dy = cand.y - q.y;
          if (dx * dx + dy * dy < min_sep2) {
            ok = false;
            break;
          }
        }
        if (ok && std::find(placed.begin(), placed.end(), cand) == placed.end()) {
          placed.push_back(cand);
          found = true;
          break;
        }
      }
      failed = !found;
    }
    if (!failed) return placed;
  }
  throw InfeasibleError("tx placement: could not place " + std::to_string(p.tx_count) +
                        " tx at separation " + std::to_string(p.tx_min_separation) +
                        " within the attempt budget");
}

}  // namespace

std::pair<EnvironmentMap, std::vector<Cell>> generate_environment(
    const CityGenParams& params) {
  params.validate();
  EnvironmentMap env;
  env.geometry = GridGeometry{params.width, params.height, params.cell_size};
  env.occupancy.assign(env.geometry.size(), Occupancy::free_cell);

  Rng block_rng(derive_seed(params.seed, kBlockStream));
  fill_buildings(env, params, block_rng);

  Rng tx_rng(derive_seed(params.seed, kTxStream));
  std::vector<Cell> txs = place_tx(env, params, tx_rng);
  return {std::move(env), std::move(txs)};
}

namespace {

// One Pareto label: metric length and accumulated penalty of a path. Two
// labels are kept at a cell only when neither dominates the other; the
// useful front stays small because labels above the attenuation cap can
// never produce a visible value downstream.
struct PathLabel {
  double length;
  double penalty;
};

struct QueueEntry {
  double attenuation;
  double length;
  double penalty;
  int cell;
  bool operator>(const QueueEntry& o) const { return attenuation > o.attenuation; }
};

inline double attenuation_of(double exponent, double length, double penalty) {
  return exponent * std::log2(1.0 + length) + penalty;
}

}  // namespace

RadioMap simulate_pathloss(const EnvironmentMap& env, Cell tx,
                           const PropagationParams& params) {
  params.validate();
  const GridGeometry& g = env.geometry;
  g.validate();
  if (!g.contains(tx.x, tx.y))
    throw std::out_of_range("simulate_pathloss: tx outside grid");
  if (env.at(tx) != Occupancy::free_cell)
    throw ConfigError("simulate_pathloss: tx must be on a free cell");

  const int w = g.width, h = g.height;
  const std::size_t n = g.size();
  // Labels with attenuation beyond this cap round below every representable
  // value, and attenuation only grows along a path.
  const double att_cap = params.ref_level -
                         (params.noise_floor > 0.0 ? params.noise_floor : 0.0) + 0.5;

  std::vector<double> best_att(n, std::numeric_limits<double>::infinity());
  std::vector<std::vector<PathLabel>> fronts(n);
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> pq;

  const std::size_t start = cell_index(g, tx);
  pq.push({0.0, 0.0, 0.0, static_cast<int>(start)});

  const int dx8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  const int dy8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  const double diag = std::sqrt(2.0) * g.cell_size;
  const double straight = g.cell_size;

  auto penalty_of = [&](std::size_t idx) -> double {
    switch (env.occupancy[idx]) {
      case Occupancy::building:
        return params.wall_penalty;
      case Occupancy::car:
        return params.car_penalty;
      default:
        return 0.0;
    }
  };

  while (!pq.empty()) {
    const QueueEntry e = pq.top();
    pq.pop();

    auto& front = fronts[e.cell];
    bool dominated = false;
    for (const PathLabel& l : front)
      if (l.length <= e.length && l.penalty <= e.penalty) {
        dominated = true;
        break;
      }
    if (dominated) continue;
    std::erase_if(front, [&](const PathLabel& l) {
      return e.length <= l.length && e.penalty <= l.penalty;
    });
    front.push_back({e.length, e.penalty});
    best_att[e.cell] = std::min(best_att[e.cell], e.attenuation);

    const int cx = e.cell % w, cy = e.cell / w;
    for (int k = 0; k < 8; ++k) {
      const int nx = cx + dx8[k], ny = cy + dy8[k];
      if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
      const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
      const double nlen = e.length + ((dx8[k] != 0 && dy8[k] != 0) ? diag : straight);
      const double npen = e.penalty + penalty_of(ni);
      const double natt = attenuation_of(params.exponent, nlen, npen);
      if (natt > att_cap) continue;
      bool ndominated = false;
      for (const PathLabel& l : fronts[ni])
        if (l.length <= nlen && l.penalty <= npen) {
          ndominated = true;
          break;
        }
      if (!ndominated) pq.push({natt, nlen, npen, static_cast<int>(ni)});
    }
  }

  std::vector<uint8_t> values(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(best_att[i])) continue;
    long v = std::lround(params.ref_level - best_att[i]);
    v = std::clamp(v, 0L, 255L);
    if (static_cast<double>(v) < params.noise_floor) v = 0;
    values[i] = static_cast<uint8_t>(v);
  }
  values[start] = static_cast<uint8_t>(
      std::clamp(std::lround(params.ref_level), 0L, 255L));
  return RadioMap(g, std::move(values));
}

RadioMapSet simulate_radio_map_set(const EnvironmentMap& env,
                                   const std::vector<Cell>& tx_positions,
                                   const PropagationParams& params,
                                   Exec exec) {
  RadioMapSet set;
  set.geometry = env.geometry;
  set.tx_positions = tx_positions;
  const int n = static_cast<int>(tx_positions.size());
  std::vector<RadioMap> maps(n, RadioMap(env.geometry,
                                         std::vector<uint8_t>(env.geometry.size(), 0)));
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i)
      maps[i] = simulate_pathloss(env, tx_positions[i], params);
  } else {
    for (int i = 0; i < n; ++i)
      maps[i] = simulate_pathloss(env, tx_positions[i], params);
  }
  set.maps = std::move(maps);
  set.validate();
  return set;
}

EnvironmentMap perturb_with_cars(const EnvironmentMap& env, uint64_t seed,
                                 double car_density) {
  if (car_density < 0.0 || car_density > 1.0)
    throw ConfigError("perturb_with_cars: car_density must be in [0, 1]");
  EnvironmentMap out = env;
  Rng rng(derive_seed(seed, kCarStream));
  for (std::size_t i = 0; i < out.occupancy.size(); ++i)
    if (out.occupancy[i] == Occupancy::free_cell && rng.bernoulli(car_density))
      out.occupancy[i] = Occupancy::car;
  return out;
}

ScenarioMaps generate_scenario_maps(const CityGenParams& params,
                                    const PropagationParams& est_params,
                                    const PropagationParams& meas_params,
                                    double car_density, Exec exec) {
  auto [env, txs] = generate_environment(params);
  ScenarioMaps out;
  out.estimated = simulate_radio_map_set(env, txs, est_params, exec);
  EnvironmentMap perturbed = perturb_with_cars(env, params.seed, car_density);
  // Tx cells must stay free; a car on a Tx would invalidate the deployment.
  for (const Cell& tx : txs)
    perturbed.occupancy[cell_index(perturbed.geometry, tx)] = Occupancy::free_cell;
  out.measured = simulate_radio_map_set(perturbed, txs, meas_params, exec);
  return out;
}

}  // namespace rmloc

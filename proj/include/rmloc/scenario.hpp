#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rmloc/radiomap.hpp"

namespace rmloc {

// One observation: the Tx the Rx reports, the reported RSS grey levels
// (real-valued; Gaussian noise is not re-quantized), and the ground-truth
// cell when known.
struct Measurement {
  std::vector<int> tx_ids;
  std::vector<double> rss;
  std::optional<Cell> truth;

  void validate() const;  // same lengths >= 1, no duplicate tx_ids
};

struct AssignmentStrategy {
  enum class Kind { random_positive, strongest };
  Kind kind = Kind::random_positive;
  int n_tx = 1;
  // Gaussian scenario only: judge "strongest" on noisy RSS instead of the
  // pre-noise maps.
  bool judge_on_noisy = false;
};

struct NoiseScenario {
  enum class Kind { gaussian, map_mismatch };
  Kind kind = Kind::gaussian;
  double sigma2 = 0.0;                        // gaussian only
  const RadioMapSet* measured_maps = nullptr; // map_mismatch only, non-owning
};

// Cells of `window` with positive RSS on at least n_tx planes of ref_maps,
// in row-major order. ref_maps are the measurement-side maps: they define
// what the Rx can actually hear.
std::vector<Cell> eligible_cells(const RadioMapSet& ref_maps,
                                 const CellSet& window, int n_tx);

// Uniform draw from eligible_cells(...). Throws InfeasibleError when the
// eligible set is empty.
Cell sample_rx(const RadioMapSet& ref_maps, const CellSet& window, int n_tx,
               uint64_t seed);
Cell sample_rx(const std::vector<Cell>& eligible, uint64_t seed);

// Uniform n_tx-subset, without replacement, of the Tx with positive RSS at
// rx on ref_maps. Throws InfeasibleError on insufficient coverage.
std::vector<int> assign_random_tx(const RadioMapSet& ref_maps, Cell rx,
                                  int n_tx, uint64_t seed);

// The n_tx strongest Tx at rx on ref_maps, descending RSS, ties broken by
// ascending Tx ID. Throws InfeasibleError on insufficient coverage.
std::vector<int> assign_strongest_tx(const RadioMapSet& ref_maps, Cell rx,
                                     int n_tx);

// Synthesizes the reported RSS for the given Tx at rx. Gaussian: map value
// plus i.i.d. centered noise of variance sigma2. Map mismatch: the
// measured-map value, so the mismatch is the structured map difference.
Measurement measure(const NoiseScenario& scenario, const RadioMapSet& est_maps,
                    Cell rx, const std::vector<int>& tx_ids, uint64_t seed);

// judge_on_noisy path: draw noisy RSS for every covered Tx at rx, report the
// n_tx largest. Returns the measurement with the noisy values themselves.
Measurement measure_strongest_noisy(const RadioMapSet& est_maps, Cell rx,
                                    int n_tx, double sigma2, uint64_t seed);

}  // namespace rmloc

#include "rmloc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "rmloc/errors.hpp"
#include "rmloc/rng.hpp"

namespace rmloc {

void Measurement::validate() const {
  if (tx_ids.empty()) throw ConfigError("measurement: needs at least one tx");
  if (tx_ids.size() != rss.size())
    throw ConfigError("measurement: tx_ids and rss lengths differ");
  std::unordered_set<int> seen;
  for (int id : tx_ids)
    if (!seen.insert(id).second)
      throw ConfigError("measurement: duplicate tx id " + std::to_string(id));
}

std::vector<Cell> eligible_cells(const RadioMapSet& ref_maps,
                                 const CellSet& window, int n_tx) {
  if (n_tx < 0) throw ConfigError("eligible_cells: n_tx must be >= 0");
  if (window.geometry() != ref_maps.geometry)
    throw ConfigError("eligible_cells: window geometry differs from maps");
  std::vector<Cell> out;
  for (const Cell& c : window.cells())
    if (coverage_count(ref_maps, c) >= n_tx) out.push_back(c);
  return out;
}

Cell sample_rx(const std::vector<Cell>& eligible, uint64_t seed) {
  if (eligible.empty())
    throw InfeasibleError("sample_rx: no eligible rx cells");
  Rng rng(seed);
  return eligible[rng.uniform_below(eligible.size())];
}

Cell sample_rx(const RadioMapSet& ref_maps, const CellSet& window, int n_tx,
               uint64_t seed) {
  return sample_rx(eligible_cells(ref_maps, window, n_tx), seed);
}

std::vector<int> assign_random_tx(const RadioMapSet& ref_maps, Cell rx,
                                  int n_tx, uint64_t seed) {
  if (n_tx < 1) throw ConfigError("assign_random_tx: n_tx must be >= 1");
  std::vector<int> positive;
  for (int tx = 0; tx < ref_maps.tx_count(); ++tx)
    if (rss_at(ref_maps, tx, rx) > 0) positive.push_back(tx);
  if (static_cast<int>(positive.size()) < n_tx)
    throw InfeasibleError("assign_random_tx: only " +
                          std::to_string(positive.size()) +
                          " tx with positive RSS at rx, need " +
                          std::to_string(n_tx));
  // Partial Fisher-Yates: the first n_tx slots are a uniform subset.
  Rng rng(seed);
  for (int i = 0; i < n_tx; ++i) {
    const std::size_t j = i + rng.uniform_below(positive.size() - i);
    std::swap(positive[i], positive[j]);
  }
  positive.resize(n_tx);
  return positive;
}

std::vector<int> assign_strongest_tx(const RadioMapSet& ref_maps, Cell rx,
                                     int n_tx) {
  if (n_tx < 1) throw ConfigError("assign_strongest_tx: n_tx must be >= 1");
  std::vector<int> ids = strongest_tx_at(ref_maps, rx, n_tx);
  if (static_cast<int>(ids.size()) < n_tx)
    throw InfeasibleError("assign_strongest_tx: only " +
                          std::to_string(ids.size()) +
                          " tx with positive RSS at rx, need " +
                          std::to_string(n_tx));
  return ids;
}

Measurement measure(const NoiseScenario& scenario, const RadioMapSet& est_maps,
                    Cell rx, const std::vector<int>& tx_ids, uint64_t seed) {
  Measurement m;
  m.tx_ids = tx_ids;
  m.truth = rx;
  m.rss.reserve(tx_ids.size());
  switch (scenario.kind) {
    case NoiseScenario::Kind::gaussian: {
      if (!(scenario.sigma2 > 0.0))
        throw ConfigError("measure: gaussian scenario needs sigma2 > 0");
      Rng rng(seed);
      const double sigma = std::sqrt(scenario.sigma2);
      for (int tx : tx_ids)
        m.rss.push_back(rss_at(est_maps, tx, rx) + rng.normal(0.0, sigma));
      break;
    }
    case NoiseScenario::Kind::map_mismatch: {
      if (scenario.measured_maps == nullptr)
        throw ConfigError("measure: map_mismatch scenario needs measured_maps");
      for (int tx : tx_ids)
        m.rss.push_back(static_cast<double>(rss_at(*scenario.measured_maps, tx, rx)));
      break;
    }
  }
  m.validate();
  return m;
}

Measurement measure_strongest_noisy(const RadioMapSet& est_maps, Cell rx,
                                    int n_tx, double sigma2, uint64_t seed) {
  if (n_tx < 1) throw ConfigError("measure_strongest_noisy: n_tx must be >= 1");
  if (!(sigma2 > 0.0))
    throw ConfigError("measure_strongest_noisy: sigma2 must be > 0");
  Rng rng(seed);
  const double sigma = std::sqrt(sigma2);
  // Noisy RSS for every covered Tx, then keep the n_tx largest reports.
  std::vector<std::pair<double, int>> noisy;
  for (int tx = 0; tx < est_maps.tx_count(); ++tx) {
    const uint8_t c = rss_at(est_maps, tx, rx);
    if (c > 0) noisy.emplace_back(c + rng.normal(0.0, sigma), tx);
  }
  if (static_cast<int>(noisy.size()) < n_tx)
    throw InfeasibleError("measure_strongest_noisy: insufficient coverage at rx");
  std::sort(noisy.begin(), noisy.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  Measurement m;
  m.truth = rx;
  for (int i = 0; i < n_tx; ++i) {
    m.tx_ids.push_back(noisy[i].second);
    m.rss.push_back(noisy[i].first);
  }
  m.validate();
  return m;
}

}  // namespace rmloc

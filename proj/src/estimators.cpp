#include "rmloc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rmloc/errors.hpp"
#include "rmloc/rng.hpp"

namespace rmloc {

CellSet Posterior::support() const {
  CellSet s(geometry);
  for (const Cell& c : cells) s.insert(c);
  return s;
}

std::vector<double> normalize_log_weights(const std::vector<double>& log_weights) {
  if (log_weights.empty())
    throw ConfigError("normalize_log_weights: empty weight vector");
  const double m = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> mass(log_weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    mass[i] = std::exp(log_weights[i] - m);
    sum += mass[i];
  }
  for (double& p : mass) p /= sum;
  return mass;
}

namespace {

// Per-cell scoring kernel. Every cell's weight is an independent, identical
// float expression, so the OpenMP fill is bit-identical to the serial one;
// the normalization that follows is a serial fixed-order reduction.
void score_cells(const Measurement& m, const RadioMapSet& est_maps,
                 const Prior& prior, const NoiseModel& noise,
                 std::vector<double>& log_weights, Exec exec) {
  const std::size_t n = prior.size();
  const std::size_t n_tx = m.tx_ids.size();
  const GridGeometry& g = est_maps.geometry;
  const std::vector<Cell>& cells = prior.cells();
  const std::vector<double>& prior_mass = prior.mass();

  std::vector<const uint8_t*> planes(n_tx);
  for (std::size_t j = 0; j < n_tx; ++j)
    planes[j] = est_maps.maps[m.tx_ids[j]].data();

  log_weights.resize(n);

  if (const auto* gm = std::get_if<GaussianNoiseModel>(&noise)) {
    if (!(gm->sigma2 > 0.0))
      throw ConfigError("posterior: gaussian sigma2 must be positive");
    const double mu = gm->mu;
    const double inv_two_sigma2 = 1.0 / (2.0 * gm->sigma2);
    auto score_one = [&](std::size_t i) {
      const std::size_t idx = cell_index(g, cells[i]);
      double ll = std::log(prior_mass[i]);
      for (std::size_t j = 0; j < n_tx; ++j) {
        const double z = m.rss[j] - static_cast<double>(planes[j][idx]);
        const double d = z - mu;
        ll -= d * d * inv_two_sigma2;
      }
      log_weights[i] = ll;
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        score_one(static_cast<std::size_t>(i));
    } else {
      for (std::size_t i = 0; i < n; ++i) score_one(i);
    }
  } else {
    const auto& hm = std::get<HistogramNoiseModel>(noise);
    std::vector<double> log_probs(hm.probs().size());
    for (std::size_t b = 0; b < log_probs.size(); ++b)
      log_probs[b] = std::log(hm.probs()[b]);
    auto score_one = [&](std::size_t i) {
      const std::size_t idx = cell_index(g, cells[i]);
      double ll = std::log(prior_mass[i]);
      for (std::size_t j = 0; j < n_tx; ++j) {
        const double z = m.rss[j] - static_cast<double>(planes[j][idx]);
        ll += log_probs[hm.bin_of(z)];
      }
      log_weights[i] = ll;
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        score_one(static_cast<std::size_t>(i));
    } else {
      for (std::size_t i = 0; i < n; ++i) score_one(i);
    }
  }
}

}  // namespace

Posterior posterior(const Measurement& m, const RadioMapSet& est_maps,
                    const Prior& prior, const NoiseModel& noise, Exec exec) {
  m.validate();
  if (prior.geometry() != est_maps.geometry)
    throw ConfigError("posterior: prior geometry differs from maps");
  for (int tx : m.tx_ids)
    if (tx < 0 || tx >= est_maps.tx_count())
      throw std::out_of_range("posterior: tx id " + std::to_string(tx) +
                              " out of range");

  Posterior post;
  post.geometry = est_maps.geometry;
  post.cells = prior.cells();
  score_cells(m, est_maps, prior, noise, post.log_weights, exec);

  for (double lw : post.log_weights)
    if (!std::isfinite(lw))
      throw std::logic_error("posterior: non-finite log weight");

  post.mass = normalize_log_weights(post.log_weights);
  return post;
}

PositionEstimate pme_locate(const Posterior& post) {
  if (post.cells.empty() || post.cells.size() != post.mass.size())
    throw ConfigError("pme_locate: malformed posterior");
  double ex = 0.0, ey = 0.0;
  for (std::size_t i = 0; i < post.cells.size(); ++i) {
    ex += post.mass[i] * post.cells[i].x;
    ey += post.mass[i] * post.cells[i].y;
  }
  return PositionEstimate{ex, ey, std::nullopt};
}

PositionEstimate knn_locate(const Measurement& m, const RadioMapSet& est_maps,
                            const CellSet& candidates, int k) {
  m.validate();
  if (k < 1) throw ConfigError("knn_locate: k must be >= 1");
  if (candidates.empty()) throw ConfigError("knn_locate: empty candidate set");
  if (candidates.geometry() != est_maps.geometry)
    throw ConfigError("knn_locate: candidate geometry differs from maps");
  for (int tx : m.tx_ids)
    if (tx < 0 || tx >= est_maps.tx_count())
      throw std::out_of_range("knn_locate: tx id out of range");

  const std::vector<Cell> cells = candidates.cells();  // row-major
  const std::size_t n = cells.size();
  const std::size_t n_tx = m.tx_ids.size();
  std::vector<const uint8_t*> planes(n_tx);
  for (std::size_t j = 0; j < n_tx; ++j)
    planes[j] = est_maps.maps[m.tx_ids[j]].data();

  std::vector<double> dist2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx = cell_index(est_maps.geometry, cells[i]);
    double d2 = 0.0;
    for (std::size_t j = 0; j < n_tx; ++j) {
      const double z = m.rss[j] - static_cast<double>(planes[j][idx]);
      d2 += z * z;
    }
    dist2[i] = d2;
  }

  const std::size_t kk = std::min<std::size_t>(k, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Candidate indices are row-major, which is exactly the documented
  // tie-break at the k-th rank.
  std::partial_sort(order.begin(), order.begin() + kk, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (dist2[a] != dist2[b]) return dist2[a] < dist2[b];
                      return a < b;
                    });

  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < kk; ++i) {
    cx += cells[order[i]].x;
    cy += cells[order[i]].y;
  }
  return PositionEstimate{cx / kk, cy / kk, std::nullopt};
}

std::vector<double> mse_optimality_audit(const AuditConfig& cfg,
                                         const std::vector<AuditEstimator>& estimators) {
  if (cfg.est_maps == nullptr)
    throw ConfigError("mse_optimality_audit: est_maps is required");
  if (estimators.empty())
    throw ConfigError("mse_optimality_audit: needs at least one estimator");
  if (cfg.trials < 1)
    throw ConfigError("mse_optimality_audit: trials must be >= 1");

  const RadioMapSet& maps = *cfg.est_maps;
  const std::vector<Cell> eligible =
      eligible_cells(maps, cfg.window, cfg.assignment.n_tx);
  if (eligible.empty())
    throw InfeasibleError("mse_optimality_audit: no eligible rx cells");

  NoiseScenario scenario;
  scenario.kind = NoiseScenario::Kind::gaussian;
  scenario.sigma2 = cfg.sigma2;

  std::vector<double> sum_sq(estimators.size(), 0.0);
  for (int t = 0; t < cfg.trials; ++t) {
    const uint64_t trial_seed = derive_seed(cfg.seed, static_cast<uint64_t>(t));
    const Cell rx = sample_rx(eligible, derive_seed(trial_seed, 0));
    std::vector<int> tx_ids;
    if (cfg.assignment.kind == AssignmentStrategy::Kind::random_positive)
      tx_ids = assign_random_tx(maps, rx, cfg.assignment.n_tx,
                                derive_seed(trial_seed, 1));
    else
      tx_ids = assign_strongest_tx(maps, rx, cfg.assignment.n_tx);
    const Measurement m =
        measure(scenario, maps, rx, tx_ids, derive_seed(trial_seed, 2));
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      const PositionEstimate est = estimators[e].locate(m);
      const double dx = est.x - rx.x, dy = est.y - rx.y;
      sum_sq[e] += dx * dx + dy * dy;
    }
  }
  for (double& s : sum_sq) s /= cfg.trials;
  return sum_sq;
}

}  // namespace rmloc

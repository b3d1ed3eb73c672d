#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rmloc/noise.hpp"
#include "rmloc/priors.hpp"
#include "rmloc/scenario.hpp"

namespace rmloc {

struct Posterior {
  GridGeometry geometry;
  std::vector<Cell> cells;        // support, row-major order
  std::vector<double> log_weights;  // unnormalized log posterior
  std::vector<double> mass;         // normalized, sums to 1 within 1e-10

  CellSet support() const;
};

struct PositionEstimate {
  double x = 0.0;
  double y = 0.0;
  std::optional<Posterior> posterior;
};

// Normalizes log weights via max-shifted exponentiation. Exposed separately
// so the scale-invariance property (adding a constant changes nothing) can
// be tested directly.
std::vector<double> normalize_log_weights(const std::vector<double>& log_weights);

// Bayes posterior over the prior support: for each support cell y,
//   log w(y) = log p(y) + sum_i log l(r_i - c_i(y))
// with the Gaussian log-likelihood -(z - mu)^2 / (2 sigma2) (constants
// dropped) or the histogram bin log-probability (real-valued z rounded to
// the nearest integer difference, clamped into the edge bins).
// Under Exec::parallel the per-cell weights are computed by an OpenMP loop;
// normalization is a serial fixed-order reduction either way, so the result
// is bit-identical for any worker count.
Posterior posterior(const Measurement& m, const RadioMapSet& est_maps,
                    const Prior& prior, const NoiseModel& noise,
                    Exec exec = Exec::parallel);

// Posterior mean: probability-weighted mean of the support coordinates.
PositionEstimate pme_locate(const Posterior& post);

// kNN baseline: rank candidates by Euclidean distance between the reported
// RSS vector and the candidate fingerprint over the reported Tx dims, then
// return the unweighted centroid of the min(k, |candidates|) nearest. Ties
// at the k-th rank break by row-major cell order.
PositionEstimate knn_locate(const Measurement& m, const RadioMapSet& est_maps,
                            const CellSet& candidates, int k);

// Monte Carlo MSE audit used by the acceptance tests: PME with the true
// prior and noise model must not lose to any competitor.
struct AuditEstimator {
  std::string name;
  std::function<PositionEstimate(const Measurement&)> locate;
};

struct AuditConfig {
  const RadioMapSet* est_maps = nullptr;
  CellSet window;
  AssignmentStrategy assignment;
  double sigma2 = 5.0;
  int trials = 1000;
  uint64_t seed = 1;

  AuditConfig() : window(GridGeometry{1, 1}) {}
};

// Empirical mean squared Euclidean error per estimator, all estimators
// consuming the identical measurement in every trial.
std::vector<double> mse_optimality_audit(const AuditConfig& cfg,
                                         const std::vector<AuditEstimator>& estimators);

}  // namespace rmloc

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rmloc/estimators.hpp"
#include "rmloc/synthgen.hpp"

namespace rmloc {

enum class PriorKind {
  uniform_full,
  window,
  perfect_random,
  perfect_strongest,
  approx_strongest,
};

std::string to_string(PriorKind kind);
PriorKind prior_kind_from_string(const std::string& s);

struct EstimatorSpec {
  enum class Kind { pme_gaussian, pme_histogram, knn };
  Kind kind = Kind::pme_gaussian;

  // pme_gaussian: "known" uses mu/sigma2 below (sigma2 defaulting to the
  // scenario's), "trained" fits the model on the training-split maps.
  bool trained = false;
  std::optional<double> mu;
  std::optional<double> sigma2;
  std::optional<std::string> model_path;  // pre-trained model file
  int k = 200;                            // knn only

  std::string name() const;
};

struct SyntheticMapsConfig {
  CityGenParams city;
  PropagationParams estimation;
  PropagationParams measurement;
  double car_density = 0.0;
  int deployments = 1;
};

struct FileMapsConfig {
  std::string estimated_path;
  std::string measured_path;  // empty when the scenario needs none
};

struct ExperimentConfig {
  std::variant<SyntheticMapsConfig, FileMapsConfig> maps;
  AssignmentStrategy assignment;
  NoiseScenario::Kind noise_kind = NoiseScenario::Kind::gaussian;
  double sigma2 = 5.0;                       // gaussian scenario
  std::optional<std::pair<int, int>> window;  // w, h; full grid when absent
  std::vector<PriorKind> priors;
  std::vector<EstimatorSpec> estimators;
  int trials = 200;          // per test map
  double train_ratio = 0.85;  // whole-map split, never by cells
  uint64_t seed = 1;
  bool per_map_rows = false;  // pooled aggregation is the default
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

// Parses a bare synthetic-maps block ({"city": .., "estimation": .., ...})
// or a full experiment config containing one under maps.synthetic.
SyntheticMapsConfig parse_synthetic_maps_config(const std::string& json_text);

struct EvalRow {
  std::string estimator;
  std::string prior;
  int n_tx = 0;
  double mae = 0.0;
  double rmse = 0.0;
  int64_t trials = 0;
  uint64_t seed = 0;
};

struct EvalReport {
  uint64_t config_fingerprint = 0;
  std::vector<EvalRow> rows;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

bool operator==(const EvalRow&, const EvalRow&);

// MAE = mean Euclidean error, RMSE = root mean squared Euclidean error.
std::pair<double, double> compute_metrics(std::span<const Vec2> errors);

// Raw per-trial error vectors per (estimator, prior) row, pooled over all
// test maps. run_experiment reduces this to metrics; the acceptance suite
// uses it directly for paired standard errors.
struct ExperimentErrors {
  std::vector<std::string> estimator_names;  // one per row
  std::vector<std::string> prior_names;
  std::vector<std::vector<Vec2>> errors;     // [row][trial]
  std::vector<int> trial_map;                // deployment index per trial
  int n_tx = 0;
  uint64_t seed = 0;
  uint64_t config_fingerprint = 0;
};

ExperimentErrors run_experiment_errors(const ExperimentConfig& cfg,
                                       Exec exec = Exec::parallel);
EvalReport run_experiment(const ExperimentConfig& cfg,
                          Exec exec = Exec::parallel);

enum class ReportFormat { csv, json };

// Stable column order: estimator, prior, n_tx, MAE, RMSE, trials, seed.
// RMSE >= MAE is asserted for every row at emission.
void emit_report(const EvalReport& report, ReportFormat format,
                 const std::filesystem::path& path);
std::string report_to_csv(const EvalReport& report);
std::string report_to_json(const EvalReport& report);
EvalReport load_report_json(const std::filesystem::path& path);

}  // namespace rmloc

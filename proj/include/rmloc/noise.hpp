#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "rmloc/radiomap.hpp"

namespace rmloc {

struct GaussianNoiseModel {
  double mu = 0.0;
  double sigma2 = 1.0;  // > 0
};

// Likelihood of the mismatch z as a histogram over grey-level differences.
// The default 511 unit-width bins span [-255.5, 255.5] and capture every
// difference two 8-bit maps can take; other odd bin counts over the same
// range are accepted but 511 is the reference configuration.
class HistogramNoiseModel {
 public:
  static constexpr int kDefaultBins = 511;

  explicit HistogramNoiseModel(std::vector<double> probs);

  int bins() const { return static_cast<int>(probs_.size()); }
  double bin_width() const { return 511.0 / bins(); }
  int bin_of(double z) const;
  double prob_of(double z) const { return probs_[bin_of(z)]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// Accumulates integer grey-level differences (measured - estimated) over
// (Tx, cell) pairs where either side is positive; all-zero pairs carry no
// mismatch information and would only spike bin 0.
class MismatchSamples {
 public:
  void add(const RadioMapSet& est_maps, const RadioMapSet& measured_maps,
           const CellSet& region);
  void add_sample(int diff);  // diff in [-255, 255]

  int64_t total() const { return total_; }

  // Sample mean/variance (unbiased). Throws ConfigError when fewer than two
  // samples are present or the variance is zero (degenerate data).
  GaussianNoiseModel fit_gaussian() const;

  // Laplace add-one smoothing per bin, then normalization; every bin keeps
  // a positive floor so log-likelihoods stay finite.
  HistogramNoiseModel fit_histogram(int bins = HistogramNoiseModel::kDefaultBins) const;

 private:
  std::array<int64_t, 511> counts_{};
  int64_t total_ = 0;
};

GaussianNoiseModel train_gaussian(const RadioMapSet& est_maps,
                                  const RadioMapSet& measured_maps,
                                  const CellSet& sample_region);
HistogramNoiseModel train_histogram(const RadioMapSet& est_maps,
                                    const RadioMapSet& measured_maps,
                                    const CellSet& sample_region);

using NoiseModel = std::variant<GaussianNoiseModel, HistogramNoiseModel>;

// {"kind":"gaussian","mu":..,"sigma2":..} or {"kind":"histogram","probs":[..]}
void save_noise_model(const NoiseModel& model, const std::filesystem::path& path);
NoiseModel load_noise_model(const std::filesystem::path& path);

}  // namespace rmloc

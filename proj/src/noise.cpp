#include "rmloc/noise.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <string>

#include "rmloc/errors.hpp"

namespace rmloc {

using nlohmann::json;

HistogramNoiseModel::HistogramNoiseModel(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty() || probs_.size() % 2 == 0)
    throw ConfigError("histogram model: bin count must be odd and positive");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p > 0.0))
      throw ConfigError("histogram model: every bin needs positive probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw ConfigError("histogram model: probabilities sum to " +
                      std::to_string(sum) + ", expected 1");
}

int HistogramNoiseModel::bin_of(double z) const {
  // Uniform bins spanning [-255.5, 255.5]; out-of-range values clamp into
  // the edge bins. With 511 bins this is nearest-integer mapping.
  const int idx = static_cast<int>(std::floor((z + 255.5) / bin_width()));
  return std::clamp(idx, 0, bins() - 1);
}

void MismatchSamples::add(const RadioMapSet& est_maps,
                          const RadioMapSet& measured_maps,
                          const CellSet& region) {
  if (est_maps.geometry != measured_maps.geometry)
    throw ConfigError("mismatch samples: map geometries differ");
  if (est_maps.tx_count() != measured_maps.tx_count())
    throw ConfigError("mismatch samples: tx counts differ");
  if (region.geometry() != est_maps.geometry)
    throw ConfigError("mismatch samples: region geometry differs from maps");
  const std::vector<Cell> cells = region.cells();
  for (int tx = 0; tx < est_maps.tx_count(); ++tx) {
    const uint8_t* est = est_maps.maps[tx].data();
    const uint8_t* meas = measured_maps.maps[tx].data();
    for (const Cell& c : cells) {
      const std::size_t i = cell_index(est_maps.geometry, c);
      if (est[i] == 0 && meas[i] == 0) continue;
      add_sample(static_cast<int>(meas[i]) - static_cast<int>(est[i]));
    }
  }
}

void MismatchSamples::add_sample(int diff) {
  if (diff < -255 || diff > 255)
    throw ConfigError("mismatch samples: difference outside [-255, 255]");
  ++counts_[diff + 255];
  ++total_;
}

GaussianNoiseModel MismatchSamples::fit_gaussian() const {
  if (total_ < 2)
    throw ConfigError("fit_gaussian: need at least two samples");
  double sum = 0.0, sum2 = 0.0;
  for (int d = -255; d <= 255; ++d) {
    const double n = static_cast<double>(counts_[d + 255]);
    sum += n * d;
    sum2 += n * d * d;
  }
  const double n = static_cast<double>(total_);
  const double mu = sum / n;
  const double sigma2 = (sum2 - n * mu * mu) / (n - 1.0);
  if (!(sigma2 > 0.0))
    throw ConfigError("fit_gaussian: degenerate (zero-variance) mismatch data");
  return GaussianNoiseModel{mu, sigma2};
}

HistogramNoiseModel MismatchSamples::fit_histogram(int bins) const {
  if (total_ < 1)
    throw ConfigError("fit_histogram: empty sample population");
  if (bins < 1 || bins % 2 == 0)
    throw ConfigError("fit_histogram: bin count must be odd and positive");
  // Rebin the unit-width counts when a different resolution is requested.
  const double width = 511.0 / bins;
  std::vector<double> mass(bins, 1.0);  // Laplace add-one
  for (int d = -255; d <= 255; ++d) {
    if (counts_[d + 255] == 0) continue;
    const int idx = std::clamp(
        static_cast<int>(std::floor((d + 255.5) / width)), 0, bins - 1);
    mass[idx] += static_cast<double>(counts_[d + 255]);
  }
  const double denom = static_cast<double>(total_) + bins;
  for (double& m : mass) m /= denom;
  return HistogramNoiseModel(std::move(mass));
}

GaussianNoiseModel train_gaussian(const RadioMapSet& est_maps,
                                  const RadioMapSet& measured_maps,
                                  const CellSet& sample_region) {
  MismatchSamples s;
  s.add(est_maps, measured_maps, sample_region);
  return s.fit_gaussian();
}

HistogramNoiseModel train_histogram(const RadioMapSet& est_maps,
                                    const RadioMapSet& measured_maps,
                                    const CellSet& sample_region) {
  MismatchSamples s;
  s.add(est_maps, measured_maps, sample_region);
  return s.fit_histogram();
}

void save_noise_model(const NoiseModel& model, const std::filesystem::path& path) {
  json j;
  if (const auto* g = std::get_if<GaussianNoiseModel>(&model)) {
    j = json{{"kind", "gaussian"}, {"mu", g->mu}, {"sigma2", g->sigma2}};
  } else {
    const auto& h = std::get<HistogramNoiseModel>(model);
    j = json{{"kind", "histogram"}, {"probs", h.probs()}};
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << j.dump(2) << "\n";
  if (!f) throw IoError("write failed: " + path.string());
}

NoiseModel load_noise_model(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw FormatError(std::string("noise model: ") + e.what());
  }
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gaussian") {
      GaussianNoiseModel g{j.at("mu").get<double>(), j.at("sigma2").get<double>()};
      if (!(g.sigma2 > 0.0))
        throw FormatError("noise model: sigma2 must be positive");
      return g;
    }
    if (kind == "histogram")
      return HistogramNoiseModel(j.at("probs").get<std::vector<double>>());
    throw FormatError("noise model: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("noise model: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("noise model: ") + e.what());
  }
}

}  // namespace rmloc

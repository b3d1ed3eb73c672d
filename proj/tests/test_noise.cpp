#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "rmloc/errors.hpp"
#include "rmloc/noise.hpp"
#include "rmloc/rng.hpp"

using namespace rmloc;

namespace {

// Paired map sets over one plane: estimated values uniform in [60, 200],
// measured = estimated + diff(i).
template <typename F>
std::pair<RadioMapSet, RadioMapSet> paired_sets(int dim, F&& diff_at, Rng& rng) {
  std::vector<uint8_t> est(static_cast<std::size_t>(dim) * dim);
  std::vector<uint8_t> meas(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    est[i] = static_cast<uint8_t>(60 + rng.uniform_below(141));
    const int d = diff_at(i);
    meas[i] = static_cast<uint8_t>(std::clamp(static_cast<int>(est[i]) + d, 0, 255));
  }
  return {testutil::make_set(dim, dim, {est}, {{0, 0}}),
          testutil::make_set(dim, dim, {meas}, {{0, 0}})};
}

}  // namespace

TEST_CASE("train_gaussian") {
  Rng rng(42);

  SUBCASE("identical maps have degenerate variance") {
    auto [est, meas] = paired_sets(8, [](std::size_t) { return 0; }, rng);
    CHECK_THROWS_AS(train_gaussian(est, meas, CellSet::full(est.geometry)),
                    ConfigError);
  }
  SUBCASE("constant +3 shift is also degenerate") {
    auto [est, meas] = paired_sets(8, [](std::size_t) { return 3; }, rng);
    CHECK_THROWS_AS(train_gaussian(est, meas, CellSet::full(est.geometry)),
                    ConfigError);
  }
  SUBCASE("recovers an injected gaussian mismatch within 5%") {
    Rng noise_rng(77);
    const int dim = 317;  // 100489 samples
    auto [est, meas] = paired_sets(
        dim,
        [&](std::size_t) {
          return static_cast<int>(std::lround(noise_rng.normal(-2.0, std::sqrt(8.0))));
        },
        rng);
    const GaussianNoiseModel g =
        train_gaussian(est, meas, CellSet::full(est.geometry));
    CHECK(std::abs(g.mu - (-2.0)) <= 0.1);
    // integer rounding adds ~1/12 to the variance
    CHECK(std::abs(g.sigma2 - (8.0 + 1.0 / 12.0)) <= 0.4);
  }
}

TEST_CASE("train_histogram") {
  Rng rng(43);

  SUBCASE("identical maps put the peak on bin zero") {
    auto [est, meas] = paired_sets(8, [](std::size_t) { return 0; }, rng);
    const HistogramNoiseModel h =
        train_histogram(est, meas, CellSet::full(est.geometry));
    REQUIRE(h.bins() == 511);
    const auto& probs = h.probs();
    const auto argmax = std::max_element(probs.begin(), probs.end()) - probs.begin();
    CHECK(argmax == 255);  // difference 0
    for (double p : probs) CHECK(p > 0.0);  // smoothing floor
  }
  SUBCASE("constant +5 shift peaks at bin +5") {
    auto [est, meas] = paired_sets(8, [](std::size_t) { return 5; }, rng);
    const HistogramNoiseModel h =
        train_histogram(est, meas, CellSet::full(est.geometry));
    const auto& probs = h.probs();
    const auto argmax = std::max_element(probs.begin(), probs.end()) - probs.begin();
    CHECK(argmax == 260);  // difference +5
  }
  SUBCASE("recovers a known discrete law within 2 points") {
    Rng law_rng(7);
    const int dim = 317;
    auto [est, meas] = paired_sets(
        dim,
        [&](std::size_t) {
          const double u = law_rng.uniform();
          return u < 0.2 ? -1 : (u < 0.7 ? 0 : 1);
        },
        rng);
    const HistogramNoiseModel h =
        train_histogram(est, meas, CellSet::full(est.geometry));
    CHECK(std::abs(h.prob_of(-1.0) - 0.2) <= 0.02);
    CHECK(std::abs(h.prob_of(0.0) - 0.5) <= 0.02);
    CHECK(std::abs(h.prob_of(1.0) - 0.3) <= 0.02);
  }
  SUBCASE("empty population is rejected") {
    const RadioMapSet zeros =
        testutil::make_set(3, 3, {std::vector<uint8_t>(9, 0)}, {{0, 0}});
    CHECK_THROWS_AS(train_histogram(zeros, zeros, CellSet::full(zeros.geometry)),
                    ConfigError);
  }
}

TEST_CASE("histogram bin mapping clamps into edge bins") {
  std::vector<double> probs(511, 1.0 / 511);
  const HistogramNoiseModel h(std::move(probs));
  CHECK(h.bin_of(0.0) == 255);
  CHECK(h.bin_of(0.4) == 255);
  CHECK(h.bin_of(0.6) == 256);
  CHECK(h.bin_of(-255.0) == 0);
  CHECK(h.bin_of(255.0) == 510);
  CHECK(h.bin_of(-1000.0) == 0);
  CHECK(h.bin_of(1000.0) == 510);
}

TEST_CASE("noise model json round-trip") {
  const auto dir = testutil::tmp_dir();

  SUBCASE("gaussian") {
    const auto path = dir / "gauss.json";
    save_noise_model(GaussianNoiseModel{-1.25, 7.5}, path);
    const NoiseModel loaded = load_noise_model(path);
    const auto& g = std::get<GaussianNoiseModel>(loaded);
    CHECK(g.mu == -1.25);
    CHECK(g.sigma2 == 7.5);
  }
  SUBCASE("histogram") {
    Rng rng(5);
    MismatchSamples s;
    for (int i = 0; i < 1000; ++i)
      s.add_sample(static_cast<int>(rng.uniform_below(11)) - 5);
    const HistogramNoiseModel h = s.fit_histogram();
    const auto path = dir / "hist.json";
    save_noise_model(h, path);
    const NoiseModel loaded = load_noise_model(path);
    CHECK(std::get<HistogramNoiseModel>(loaded).probs() == h.probs());
  }
}

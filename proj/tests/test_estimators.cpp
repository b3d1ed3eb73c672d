#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "helpers.hpp"
#include "oracles.hpp"
#include "rmloc/errors.hpp"
#include "rmloc/estimators.hpp"
#include "rmloc/rng.hpp"

using namespace rmloc;

namespace {

RadioMapSet random_maps(Rng& rng, int dim, int n_tx) {
  std::vector<std::vector<uint8_t>> planes(n_tx);
  std::vector<Cell> txs;
  for (int t = 0; t < n_tx; ++t) {
    planes[t].resize(static_cast<std::size_t>(dim) * dim);
    for (auto& v : planes[t])
      v = rng.bernoulli(0.2) ? 0 : static_cast<uint8_t>(1 + rng.uniform_below(255));
    txs.push_back({static_cast<int>(rng.uniform_below(dim)),
                   static_cast<int>(rng.uniform_below(dim))});
  }
  return testutil::make_set(dim, dim, std::move(planes), std::move(txs));
}

Measurement random_measurement(Rng& rng, const RadioMapSet& maps, int n_tx) {
  Measurement m;
  const Cell rx{static_cast<int>(rng.uniform_below(maps.geometry.width)),
                static_cast<int>(rng.uniform_below(maps.geometry.height))};
  m.truth = rx;
  std::vector<int> ids(maps.tx_count());
  std::iota(ids.begin(), ids.end(), 0);
  for (int i = 0; i < n_tx; ++i) {
    const std::size_t j = i + rng.uniform_below(ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  for (int i = 0; i < n_tx; ++i) {
    m.tx_ids.push_back(ids[i]);
    m.rss.push_back(rss_at(maps, ids[i], rx) + rng.normal(0.0, 3.0));
  }
  return m;
}

}  // namespace

TEST_CASE("posterior basics") {
  Rng rng(1);
  const RadioMapSet maps = random_maps(rng, 6, 3);

  SUBCASE("single-cell support carries all mass under any model") {
    CellSet one(maps.geometry);
    one.insert({2, 3});
    const Prior prior = uniform_prior(one);
    const Measurement m = random_measurement(rng, maps, 2);

    const Posterior pg = posterior(m, maps, prior, GaussianNoiseModel{0.0, 5.0});
    CHECK(pg.mass.size() == 1);
    CHECK(pg.mass[0] == 1.0);

    MismatchSamples s;
    for (int d = -3; d <= 3; ++d) s.add_sample(d);
    const Posterior ph = posterior(m, maps, prior, s.fit_histogram());
    CHECK(ph.mass.size() == 1);
    CHECK(ph.mass[0] == 1.0);
  }
  SUBCASE("two equidistant cells split mass evenly") {
    // one tx, fingerprints 100 at both cells, reported 90 -> equal z
    const RadioMapSet flat = testutil::make_set(
        2, 1, {{100, 100}}, {{0, 0}});
    CellSet two(flat.geometry);
    two.insert({0, 0});
    two.insert({1, 0});
    Measurement m;
    m.tx_ids = {0};
    m.rss = {90.0};
    const Posterior p = posterior(m, flat, uniform_prior(two),
                                  GaussianNoiseModel{0.0, 5.0});
    CHECK(p.mass[0] == 0.5);
    CHECK(p.mass[1] == 0.5);
  }
  SUBCASE("three-cell toy matches a hand softmax to 1e-9") {
    // fingerprints chosen so z = 2, -1, 4 for the single tx; sigma2 = 5, mu = 0
    const RadioMapSet toy = testutil::make_set(
        3, 1, {{98, 101, 96}}, {{0, 0}});
    Measurement m;
    m.tx_ids = {0};
    m.rss = {100.0};
    const Posterior p = posterior(m, toy, uniform_prior(CellSet::full(toy.geometry)),
                                  GaussianNoiseModel{0.0, 5.0});
    const long double w0 = std::exp(-4.0L / 10.0L);
    const long double w1 = std::exp(-1.0L / 10.0L);
    const long double w2 = std::exp(-16.0L / 10.0L);
    const long double sum = w0 + w1 + w2;
    CHECK(std::abs(p.mass[0] - static_cast<double>(w0 / sum)) < 1e-9);
    CHECK(std::abs(p.mass[1] - static_cast<double>(w1 / sum)) < 1e-9);
    CHECK(std::abs(p.mass[2] - static_cast<double>(w2 / sum)) < 1e-9);

    const PositionEstimate est = pme_locate(p);
    const double expect_x = static_cast<double>((w1 + 2.0L * w2) / sum);
    CHECK(est.x == doctest::Approx(expect_x).epsilon(1e-9));
    CHECK(est.y == 0.0);
  }
  SUBCASE("invalid tx id is range-checked") {
    Measurement m;
    m.tx_ids = {maps.tx_count()};
    m.rss = {1.0};
    CHECK_THROWS_AS(
        posterior(m, maps, uniform_prior(CellSet::full(maps.geometry)),
                  GaussianNoiseModel{0.0, 5.0}),
        std::out_of_range);
  }
}

TEST_CASE("normalization is stable across 12 decades of sigma2") {
  Rng rng(2);
  const RadioMapSet maps = random_maps(rng, 12, 4);
  const Prior prior = uniform_prior(CellSet::full(maps.geometry));
  for (const double sigma2 : {1e-6, 1e-3, 1.0, 5.0, 8.0, 1e3, 1e6}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Measurement m = random_measurement(rng, maps, 3);
      const Posterior p =
          posterior(m, maps, prior, GaussianNoiseModel{0.0, sigma2});
      double sum = 0.0;
      for (double v : p.mass) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-10);
      const PositionEstimate est = pme_locate(p);
      CHECK(est.x >= 0.0);
      CHECK(est.x <= maps.geometry.width - 1);
      CHECK(est.y >= 0.0);
      CHECK(est.y <= maps.geometry.height - 1);
    }
  }
}

TEST_CASE("adding a constant to all log weights changes nothing") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_below(40));
    std::vector<double> lw(n);
    for (double& v : lw) v = -500.0 + 1000.0 * rng.uniform();
    const double shift = -300.0 + 600.0 * rng.uniform();
    std::vector<double> shifted = lw;
    for (double& v : shifted) v += shift;
    const auto a = normalize_log_weights(lw);
    const auto b = normalize_log_weights(shifted);
    for (int i = 0; i < n; ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));
  }
}

TEST_CASE("posterior matches the naive high-precision oracle on small grids") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 4 + static_cast<int>(rng.uniform_below(13));
    const int n_tx = 1 + static_cast<int>(rng.uniform_below(5));
    const RadioMapSet maps = random_maps(rng, dim, n_tx);
    const Prior prior = uniform_prior(CellSet::full(maps.geometry));
    const Measurement m = random_measurement(rng, maps, n_tx);

    NoiseModel model;
    if (trial % 2 == 0) {
      model = GaussianNoiseModel{-0.5 + rng.uniform(), 0.5 + 20.0 * rng.uniform()};
    } else {
      MismatchSamples s;
      for (int i = 0; i < 5000; ++i)
        s.add_sample(static_cast<int>(
            std::clamp(std::lround(rng.normal(0.0, 4.0)), -255L, 255L)));
      model = s.fit_histogram();
    }

    const Posterior p = posterior(m, maps, prior, model);
    const auto naive = oracle::naive_posterior(m, maps, prior, model);
    for (std::size_t i = 0; i < p.mass.size(); ++i) {
      const double expect = static_cast<double>(naive.mass[i]);
      CHECK(std::abs(p.mass[i] - expect) <=
            1e-9 * std::max(1e-300, std::abs(expect)));
    }
    const PositionEstimate est = pme_locate(p);
    CHECK(std::abs(est.x - static_cast<double>(naive.ex)) <=
          1e-9 * std::max(1.0, std::abs(static_cast<double>(naive.ex))));
    CHECK(std::abs(est.y - static_cast<double>(naive.ey)) <=
          1e-9 * std::max(1.0, std::abs(static_cast<double>(naive.ey))));
  }
}

TEST_CASE("vanishing sigma2 concentrates on the distance argmin") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const RadioMapSet maps = random_maps(rng, 10, 3);
    const Prior prior = uniform_prior(CellSet::full(maps.geometry));
    const Measurement m = random_measurement(rng, maps, 2);
    const double mu = -1.0 + 2.0 * rng.uniform();

    // reference argmin of ||r - c(y) - mu*1||, ties by row-major order
    double best = std::numeric_limits<double>::infinity();
    Cell best_cell{0, 0};
    for (const Cell& c : prior.cells()) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < m.tx_ids.size(); ++j) {
        const double z = m.rss[j] - rss_at(maps, m.tx_ids[j], c) - mu;
        d2 += z * z;
      }
      if (d2 < best) {
        best = d2;
        best_cell = c;
      }
    }
    const Posterior p = posterior(m, maps, prior, GaussianNoiseModel{mu, 1e-9});
    const PositionEstimate est = pme_locate(p);
    CHECK(est.x == doctest::Approx(best_cell.x).epsilon(1e-9));
    CHECK(est.y == doctest::Approx(best_cell.y).epsilon(1e-9));
  }
}

TEST_CASE("pme_locate") {
  const GridGeometry g{32, 32};

  SUBCASE("point mass returns the cell") {
    Posterior p;
    p.geometry = g;
    p.cells = {{10, 20}};
    p.log_weights = {0.0};
    p.mass = {1.0};
    const PositionEstimate est = pme_locate(p);
    CHECK(est.x == 10.0);
    CHECK(est.y == 20.0);
  }
  SUBCASE("even split between (0,0) and (2,0) lands at (1,0)") {
    Posterior p;
    p.geometry = g;
    p.cells = {{0, 0}, {2, 0}};
    p.log_weights = {0.0, 0.0};
    p.mass = {0.5, 0.5};
    const PositionEstimate est = pme_locate(p);
    CHECK(est.x == 1.0);
    CHECK(est.y == 0.0);
  }
}

TEST_CASE("knn_locate") {
  SUBCASE("k=1 with a unique exact fingerprint returns that cell") {
    Rng rng(6);
    const int dim = 12;
    // distinct single-tx fingerprints: value = row-major index + 1
    std::vector<uint8_t> plane(dim * dim);
    for (std::size_t i = 0; i < plane.size(); ++i)
      plane[i] = static_cast<uint8_t>(i + 1);
    const RadioMapSet maps = testutil::make_set(dim, dim, {plane}, {{0, 0}});
    for (int t = 0; t < 25; ++t) {
      const Cell rx{static_cast<int>(rng.uniform_below(dim)),
                    static_cast<int>(rng.uniform_below(dim))};
      Measurement m;
      m.tx_ids = {0};
      m.rss = {static_cast<double>(rss_at(maps, 0, rx))};
      const PositionEstimate est =
          knn_locate(m, maps, CellSet::full(maps.geometry), 1);
      CHECK(est.x == rx.x);
      CHECK(est.y == rx.y);
    }
  }
  SUBCASE("k covering all candidates is the centroid, independent of rss") {
    Rng rng(7);
    const RadioMapSet maps = random_maps(rng, 5, 2);
    const CellSet cand = CellSet::full(maps.geometry);
    Measurement m1, m2;
    m1.tx_ids = m2.tx_ids = {0, 1};
    m1.rss = {10.0, 200.0};
    m2.rss = {250.0, 3.0};
    const auto a = knn_locate(m1, maps, cand, 25);
    const auto b = knn_locate(m2, maps, cand, 1000);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.x == 2.0);  // centroid of a 5x5 grid
    CHECK(a.y == 2.0);
  }
  SUBCASE("five-candidate toy: centroid of the 3 hand-ranked nearest") {
    // fingerprints 10, 11, 40, 90, 200 at x = 0..4; r = 12
    const RadioMapSet maps = testutil::make_set(
        5, 1, {{10, 11, 40, 90, 200}}, {{0, 0}});
    Measurement m;
    m.tx_ids = {0};
    m.rss = {12.0};
    // hand ranking by |r - c|: x=1 (1), x=0 (2), x=2 (28) -> centroid x = 1
    const PositionEstimate est =
        knn_locate(m, maps, CellSet::full(maps.geometry), 3);
    CHECK(est.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(est.y == 0.0);
  }
  SUBCASE("empty candidate set is rejected") {
    Rng rng(8);
    const RadioMapSet maps = random_maps(rng, 4, 1);
    Measurement m;
    m.tx_ids = {0};
    m.rss = {5.0};
    CHECK_THROWS_AS(knn_locate(m, maps, CellSet(maps.geometry), 3), ConfigError);
  }
}

TEST_CASE("serial and parallel posterior scoring are bit-identical") {
  Rng rng(9);
  const RadioMapSet maps = random_maps(rng, 24, 5);
  const Prior prior = uniform_prior(CellSet::full(maps.geometry));
  for (int trial = 0; trial < 6; ++trial) {
    const Measurement m = random_measurement(rng, maps, 4);
    const Posterior a = posterior(m, maps, prior, GaussianNoiseModel{0.0, 5.0},
                                  Exec::serial);
    const Posterior b = posterior(m, maps, prior, GaussianNoiseModel{0.0, 5.0},
                                  Exec::parallel);
    CHECK(a.log_weights == b.log_weights);
    CHECK(a.mass == b.mass);
  }
}

TEST_CASE("mse audit: informed pme beats weaker competitors") {
  auto [env, txs] = generate_environment(testutil::desk_city(31));
  const RadioMapSet maps =
      simulate_radio_map_set(env, txs, testutil::desk_propagation());
  const CellSet window = window_mask(maps.geometry, 40, 40);
  const double sigma2 = 5.0;

  AuditConfig cfg;
  cfg.est_maps = &maps;
  cfg.window = window;
  cfg.assignment.kind = AssignmentStrategy::Kind::random_positive;
  cfg.assignment.n_tx = 3;
  cfg.sigma2 = sigma2;
  cfg.trials = 400;
  cfg.seed = 99;

  const Prior perfect = perfect_prior_random(maps, window, cfg.assignment.n_tx);
  const Prior full = uniform_prior(CellSet::full(maps.geometry));
  const NoiseModel model = GaussianNoiseModel{0.0, sigma2};

  std::vector<AuditEstimator> estimators;
  estimators.push_back({"pme_perfect", [&](const Measurement& m) {
                          return pme_locate(posterior(m, maps, perfect, model));
                        }});
  estimators.push_back({"pme_full", [&](const Measurement& m) {
                          return pme_locate(posterior(m, maps, full, model));
                        }});
  estimators.push_back({"knn", [&](const Measurement& m) {
                          return knn_locate(m, maps, window, 300);
                        }});
  const std::vector<double> mse = mse_optimality_audit(cfg, estimators);
  REQUIRE(mse.size() == 3);
  CHECK(mse[0] <= mse[1]);  // true prior beats the full-grid prior
  CHECK(mse[0] <= mse[2]);  // pme with the true model beats knn
}

TEST_CASE("mse audit: zero-noise limit drives pme error to zero") {
  // distinct fingerprints guarantee a unique argmin
  const int dim = 8;
  std::vector<uint8_t> plane(dim * dim);
  for (std::size_t i = 0; i < plane.size(); ++i)
    plane[i] = static_cast<uint8_t>(i + 10);
  const RadioMapSet maps = testutil::make_set(dim, dim, {plane}, {{0, 0}});

  AuditConfig cfg;
  cfg.est_maps = &maps;
  cfg.window = CellSet::full(maps.geometry);
  cfg.assignment.n_tx = 1;
  cfg.sigma2 = 1e-12;
  cfg.trials = 200;
  cfg.seed = 5;

  const Prior full = uniform_prior(CellSet::full(maps.geometry));
  std::vector<AuditEstimator> estimators;
  estimators.push_back({"pme", [&](const Measurement& m) {
                          return pme_locate(posterior(
                              m, maps, full, GaussianNoiseModel{0.0, 1e-12}));
                        }});
  const std::vector<double> mse = mse_optimality_audit(cfg, estimators);
  CHECK(mse[0] <= 1e-12);
}

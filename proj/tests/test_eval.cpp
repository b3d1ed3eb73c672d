#include <doctest.h>

#include <cmath>
#include <fstream>
#include <omp.h>

#include "helpers.hpp"
#include "rmloc/errors.hpp"
#include "rmloc/eval.hpp"
#include "rmloc/rng.hpp"
#include "rmloc/serialize.hpp"

using namespace rmloc;

namespace {

std::string desk_config_json(const char* noise, const char* assignment,
                             int n_tx, int trials, int deployments,
                             double train_ratio) {
  std::string s = R"({
    "maps": {"synthetic": {
      "city": {"seed": 11, "width": 64, "height": 64, "block_size": 6,
               "building_density": 0.45, "street_width": 3, "tx_count": 20,
               "tx_inner_square": 40, "tx_min_separation": 6},
      "estimation": {"ref_level": 170, "exponent": 33, "wall_penalty": 100,
                     "car_penalty": 0, "noise_floor": 0},
      "measurement": {"ref_level": 170, "exponent": 33, "wall_penalty": 100,
                      "car_penalty": 45, "noise_floor": 0},
      "car_density": 0.05,
      "deployments": )" + std::to_string(deployments) + R"(}},
    "assignment": {"kind": ")" + std::string(assignment) + R"(", "n_tx": )" +
                  std::to_string(n_tx) + R"(},
    "noise": )" + std::string(noise) + R"(,
    "window": {"width": 40, "height": 40},
    "priors": ["window", "perfect_random"],
    "estimators": [{"kind": "pme_gaussian", "model": "known"}],
    "trials": )" + std::to_string(trials) + R"(,
    "train_ratio": )" + std::to_string(train_ratio) + R"(,
    "seed": 77
  })";
  return s;
}

}  // namespace

TEST_CASE("compute_metrics") {
  SUBCASE("all-zero errors") {
    const std::vector<Vec2> e(5, Vec2{0.0, 0.0});
    const auto [mae, rmse] = compute_metrics(e);
    CHECK(mae == 0.0);
    CHECK(rmse == 0.0);
  }
  SUBCASE("a single 3-4-5 error") {
    const std::vector<Vec2> e{{3.0, 4.0}};
    const auto [mae, rmse] = compute_metrics(e);
    CHECK(mae == 5.0);
    CHECK(rmse == 5.0);
  }
  SUBCASE("{(0,0),(6,8)} gives (5, sqrt 50)") {
    const std::vector<Vec2> e{{0.0, 0.0}, {6.0, 8.0}};
    const auto [mae, rmse] = compute_metrics(e);
    CHECK(mae == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(rmse == doctest::Approx(std::sqrt(50.0)).epsilon(1e-15));
  }
  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(compute_metrics(std::vector<Vec2>{}), ConfigError);
  }
  SUBCASE("rmse dominates mae on random error sets") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Vec2> e(1 + rng.uniform_below(50));
      for (Vec2& v : e) v = Vec2{rng.normal(0, 10), rng.normal(0, 10)};
      const auto [mae, rmse] = compute_metrics(e);
      CHECK(rmse >= mae - 1e-12);
    }
  }
}

TEST_CASE("config json round-trip preserves the fingerprint") {
  const ExperimentConfig cfg = parse_experiment_config(
      desk_config_json(R"({"kind": "gaussian", "sigma2": 5.0})",
                       "random_positive", 3, 50, 1, 0.0));
  const ExperimentConfig cfg2 = parse_experiment_config(experiment_config_to_json(cfg));
  CHECK(experiment_config_to_json(cfg) == experiment_config_to_json(cfg2));
}

TEST_CASE("config errors carry exit-code-1 semantics") {
  CHECK_THROWS_AS(parse_experiment_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("{}"), ConfigError);
  CHECK_THROWS_AS(
      parse_experiment_config(desk_config_json(
          R"({"kind": "gaussian", "sigma2": -1})", "random_positive", 3, 50, 1, 0.0)),
      ConfigError);
  CHECK_THROWS_AS(
      parse_experiment_config(desk_config_json(
          R"({"kind": "gaussian", "sigma2": 5})", "nope", 3, 50, 1, 0.0)),
      ConfigError);
}

TEST_CASE("zero-mismatch robustness run scores zero error with unique fingerprints") {
  // single plane with distinct values; measured == estimated
  const int dim = 10;
  std::vector<uint8_t> plane(dim * dim);
  for (std::size_t i = 0; i < plane.size(); ++i)
    plane[i] = static_cast<uint8_t>(i + 30);
  const RadioMapSet maps = testutil::make_set(dim, dim, {plane}, {{0, 0}});
  const auto dir = testutil::tmp_dir();
  save_radio_map_set(maps, dir / "zm_est.rms");
  save_radio_map_set(maps, dir / "zm_meas.rms");

  const std::string cfg_json = R"({
    "maps": {"files": {"estimated": ")" + (dir / "zm_est.rms").string() + R"("}},
    "assignment": {"kind": "random_positive", "n_tx": 1},
    "noise": {"kind": "map_mismatch",
              "measured_maps_path": ")" + (dir / "zm_meas.rms").string() + R"("},
    "priors": ["uniform_full"],
    "estimators": [{"kind": "pme_gaussian", "model": "known", "sigma2": 1e-6}],
    "trials": 100,
    "train_ratio": 0.0,
    "seed": 3
  })";
  const EvalReport report = run_experiment(parse_experiment_config(cfg_json));
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].mae <= 1e-9);
  CHECK(report.rows[0].rmse <= 1e-9);
}

TEST_CASE("experiment report is deterministic and worker-count independent") {
  const ExperimentConfig cfg = parse_experiment_config(
      desk_config_json(R"({"kind": "gaussian", "sigma2": 5.0})",
                       "random_positive", 2, 60, 1, 0.0));
  omp_set_num_threads(1);
  const EvalReport serial_run = run_experiment(cfg, Exec::serial);
  const EvalReport one_worker = run_experiment(cfg, Exec::parallel);
  omp_set_num_threads(4);
  const EvalReport four_workers = run_experiment(cfg, Exec::parallel);
  omp_set_num_threads(omp_get_num_procs());

  CHECK(report_to_csv(serial_run) == report_to_csv(one_worker));
  CHECK(report_to_csv(serial_run) == report_to_csv(four_workers));
  CHECK(serial_run == one_worker);
  CHECK(serial_run == four_workers);

  const EvalReport again = run_experiment(cfg, Exec::parallel);
  CHECK(report_to_json(again) == report_to_json(four_workers));
}

TEST_CASE("run_experiment row ordering mirrors the prior hierarchy") {
  // modest trial count; the acceptance suite runs the full-margin version
  const ExperimentConfig cfg = parse_experiment_config(R"({
    "maps": {"synthetic": {
      "city": {"seed": 21, "width": 64, "height": 64, "block_size": 6,
               "building_density": 0.45, "street_width": 3, "tx_count": 20,
               "tx_inner_square": 40, "tx_min_separation": 6},
      "estimation": {"ref_level": 170, "exponent": 33, "wall_penalty": 100,
                     "car_penalty": 0, "noise_floor": 0},
      "deployments": 2}},
    "assignment": {"kind": "random_positive", "n_tx": 3},
    "noise": {"kind": "gaussian", "sigma2": 5.0},
    "window": {"width": 40, "height": 40},
    "priors": ["perfect_random", "window", "uniform_full"],
    "estimators": [{"kind": "pme_gaussian", "model": "known"}],
    "trials": 2000,
    "train_ratio": 0.0,
    "seed": 13
  })");
  const EvalReport report = run_experiment(cfg);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].prior == "perfect_random");
  CHECK(report.rows[1].prior == "window");
  CHECK(report.rows[2].prior == "uniform_full");
  CHECK(report.rows[0].mae <= report.rows[1].mae);
  CHECK(report.rows[1].mae <= report.rows[2].mae);
  for (const EvalRow& row : report.rows) {
    CHECK(row.trials == 4000);  // 2 deployments x 2000
    CHECK(row.rmse >= row.mae);
  }
}

TEST_CASE("strongest assignment can be judged on noisy rss") {
  ExperimentConfig cfg = parse_experiment_config(
      desk_config_json(R"({"kind": "gaussian", "sigma2": 8.0})", "strongest", 2,
                       40, 1, 0.0));
  cfg.priors = {PriorKind::approx_strongest};
  cfg.assignment.judge_on_noisy = true;
  const EvalReport a = run_experiment(cfg);
  const EvalReport b = run_experiment(cfg);
  CHECK(a == b);
  REQUIRE(a.rows.size() == 1);
  CHECK(a.rows[0].trials == 40);

  SUBCASE("the switch needs gaussian noise and strongest assignment") {
    cfg.assignment.kind = AssignmentStrategy::Kind::random_positive;
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  }
}

TEST_CASE("report emission") {
  EvalReport report;
  report.config_fingerprint = 0xdeadbeefcafef00dull;

  SUBCASE("empty report emits the header only") {
    const auto path = testutil::tmp_dir() / "empty.csv";
    emit_report(report, ReportFormat::csv, path);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line == "estimator,prior,n_tx,mae,rmse,trials,seed");
    CHECK_FALSE(std::getline(f, line));
  }
  SUBCASE("rows keep the declared column order") {
    report.rows.push_back({"pme_g", "window", 3, 4.25, 5.5, 100, 9});
    report.rows.push_back({"knn_k200", "uniform_full", 3, 8.0, 9.0, 100, 9});
    const std::string csv = report_to_csv(report);
    CHECK(csv ==
          "estimator,prior,n_tx,mae,rmse,trials,seed\n"
          "pme_g,window,3,4.25,5.5,100,9\n"
          "knn_k200,uniform_full,3,8,9,100,9\n");
  }
  SUBCASE("json round-trip preserves the report") {
    report.rows.push_back({"pme_h", "approx_strongest", 1, 6.1612345, 9.4412345, 2000, 4});
    report.rows.push_back({"pme_g", "window", 1, 10.5, 16.25, 2000, 4});
    const auto path = testutil::tmp_dir() / "report.json";
    emit_report(report, ReportFormat::json, path);
    const EvalReport loaded = load_report_json(path);
    CHECK(loaded == report);
  }
  SUBCASE("violating rmse >= mae is refused at emission") {
    report.rows.push_back({"pme_g", "window", 1, 5.0, 4.0, 10, 1});
    CHECK_THROWS_AS(report_to_csv(report), std::logic_error);
  }
}

TEST_CASE("per-map rows are appended after the pooled rows") {
  const ExperimentConfig base = parse_experiment_config(
      desk_config_json(R"({"kind": "gaussian", "sigma2": 5.0})",
                       "random_positive", 1, 30, 2, 0.0));
  ExperimentConfig cfg = base;
  cfg.per_map_rows = true;
  const EvalReport report = run_experiment(cfg);
  // 1 estimator x 2 priors -> 2 pooled rows + 2 rows x 2 maps
  REQUIRE(report.rows.size() == 6);
  CHECK(report.rows[0].trials == 60);
  CHECK(report.rows[2].estimator == "pme_g@map0");
  CHECK(report.rows[2].trials == 30);
}

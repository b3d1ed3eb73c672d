// Command line surface: map generation, noise model training, single-query
// localization, full experiments and external raster import.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <omp.h>
#include <sstream>

#include "rmloc/errors.hpp"
#include "rmloc/eval.hpp"
#include "rmloc/serialize.hpp"

namespace {

using nlohmann::json;
using namespace rmloc;

json load_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(path.string()) + ": " + e.what());
  }
}

struct GenMapsArgs {
  std::string config;
  std::string out_dir;
};

void cmd_gen_maps(const GenMapsArgs& args) {
  std::ifstream f(args.config);
  if (!f) throw IoError("cannot open: " + args.config);
  std::stringstream ss;
  ss << f.rdbuf();
  const SyntheticMapsConfig sc = parse_synthetic_maps_config(ss.str());

  const ScenarioMaps maps = generate_scenario_maps(sc.city, sc.estimation,
                                                   sc.measurement, sc.car_density);
  std::filesystem::create_directories(args.out_dir);
  const auto dir = std::filesystem::path(args.out_dir);
  save_radio_map_set(maps.estimated, dir / "estimated.rms");
  save_radio_map_set(maps.measured, dir / "measured.rms");
  std::cout << "wrote " << (dir / "estimated.rms").string() << " and "
            << (dir / "measured.rms").string() << " (" << sc.city.width << "x"
            << sc.city.height << ", " << sc.city.tx_count << " tx)\n";
}

struct TrainNoiseArgs {
  std::string config;
  std::string out_path;
};

void cmd_train_noise(const TrainNoiseArgs& args) {
  const json j = load_json_file(args.config);
  std::string kind;
  std::string est_path, meas_path;
  try {
    kind = j.at("model").get<std::string>();
    est_path = j.at("estimated").get<std::string>();
    meas_path = j.at("measured").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train-noise config: ") + e.what());
  }
  const RadioMapSet est = load_radio_map_set(est_path);
  const RadioMapSet meas = load_radio_map_set(meas_path);
  const CellSet region = CellSet::full(est.geometry);
  NoiseModel model;
  if (kind == "gaussian")
    model = train_gaussian(est, meas, region);
  else if (kind == "histogram")
    model = train_histogram(est, meas, region);
  else
    throw ConfigError("train-noise: model must be 'gaussian' or 'histogram'");
  save_noise_model(model, args.out_path);
  if (const auto* g = std::get_if<GaussianNoiseModel>(&model))
    std::cout << "gaussian model: mu=" << g->mu << " sigma2=" << g->sigma2 << "\n";
  else
    std::cout << "histogram model: 511 bins\n";
  std::cout << "wrote " << args.out_path << "\n";
}

struct LocateArgs {
  std::string maps_path;
  std::string ref_maps_path;  // measurement-side maps for prior building
  std::string measurement_path;
  std::string prior = "uniform_full";
  std::string noise_path;
  double sigma2 = 0.0;
  int window_w = 0, window_h = 0;
  std::string posterior_dump;
};

void cmd_locate(const LocateArgs& args) {
  const RadioMapSet maps = load_radio_map_set(args.maps_path);
  const RadioMapSet ref_maps = args.ref_maps_path.empty()
                                   ? maps
                                   : load_radio_map_set(args.ref_maps_path);

  const json mj = load_json_file(args.measurement_path);
  Measurement m;
  try {
    m.tx_ids = mj.at("tx_ids").get<std::vector<int>>();
    m.rss = mj.at("rss").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("measurement: ") + e.what());
  }
  m.validate();

  NoiseModel model;
  if (!args.noise_path.empty())
    model = load_noise_model(args.noise_path);
  else if (args.sigma2 > 0.0)
    model = GaussianNoiseModel{0.0, args.sigma2};
  else
    throw ConfigError("locate: provide --noise or --sigma2");

  const CellSet window =
      (args.window_w > 0 && args.window_h > 0)
          ? window_mask(maps.geometry, args.window_w, args.window_h)
          : CellSet::full(maps.geometry);

  Prior prior = [&] {
    const PriorKind kind = prior_kind_from_string(args.prior);
    switch (kind) {
      case PriorKind::uniform_full:
        return uniform_prior(CellSet::full(maps.geometry));
      case PriorKind::window:
        return uniform_prior(window);
      case PriorKind::perfect_random:
        return perfect_prior_random(ref_maps, window,
                                    static_cast<int>(m.tx_ids.size()));
      case PriorKind::perfect_strongest:
        return perfect_prior_strongest(ref_maps, window, m.tx_ids);
      case PriorKind::approx_strongest:
        return approx_prior_strongest(maps, window, m.tx_ids);
    }
    throw ConfigError("locate: unknown prior");
  }();

  const Posterior post = posterior(m, maps, prior, model);
  const PositionEstimate est = pme_locate(post);
  std::cout << json{{"x", est.x}, {"y", est.y}}.dump() << "\n";

  if (!args.posterior_dump.empty()) {
    json cells = json::array();
    for (std::size_t i = 0; i < post.cells.size(); ++i)
      cells.push_back(
          json{{"x", post.cells[i].x}, {"y", post.cells[i].y}, {"p", post.mass[i]}});
    std::ofstream f(args.posterior_dump);
    if (!f) throw IoError("cannot open for writing: " + args.posterior_dump);
    f << json{{"cells", cells}}.dump() << "\n";
  }
}

struct RunArgs {
  std::string config;
  std::string out_path;
  std::string format = "auto";
  int threads = 0;
};

void cmd_run(const RunArgs& args) {
  if (args.threads > 0) omp_set_num_threads(args.threads);
  const ExperimentConfig cfg = load_experiment_config(args.config);
  const EvalReport report = run_experiment(cfg);
  ReportFormat fmt;
  if (args.format == "csv")
    fmt = ReportFormat::csv;
  else if (args.format == "json")
    fmt = ReportFormat::json;
  else if (args.format == "auto")
    fmt = std::filesystem::path(args.out_path).extension() == ".json"
              ? ReportFormat::json
              : ReportFormat::csv;
  else
    throw ConfigError("run: format must be csv or json");
  emit_report(report, fmt, args.out_path);
  std::cout << report_to_csv(report);
}

struct ImportArgs {
  std::string dir;
  std::string out_path;
};

void cmd_import(const ImportArgs& args) {
  const RadioMapSet set = import_raster_dir(args.dir);
  save_radio_map_set(set, args.out_path);
  std::cout << "imported " << set.tx_count() << " planes (" << set.geometry.width
            << "x" << set.geometry.height << ") into " << args.out_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RSS fingerprint localization engine and benchmark harness"};
  app.require_subcommand(1);

  GenMapsArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen-maps", "generate a synthetic radio map pair");
  gen->add_option("config", gen_args.config, "scenario config (JSON)")->required();
  gen->add_option("-o,--out", gen_args.out_dir, "output directory")->required();

  TrainNoiseArgs train_args;
  CLI::App* train = app.add_subcommand("train-noise", "fit a mismatch noise model");
  train->add_option("config", train_args.config, "training config (JSON)")->required();
  train->add_option("-o,--out", train_args.out_path, "model output (JSON)")->required();

  LocateArgs loc_args;
  CLI::App* loc = app.add_subcommand("locate", "locate a single measurement");
  loc->add_option("--maps", loc_args.maps_path, "estimated radio map set (.rms)")->required();
  loc->add_option("--ref-maps", loc_args.ref_maps_path,
                  "measurement-side maps for perfect priors (defaults to --maps)");
  loc->add_option("--measurement", loc_args.measurement_path, "measurement (JSON)")->required();
  loc->add_option("--prior", loc_args.prior,
                  "uniform_full|window|perfect_random|perfect_strongest|approx_strongest");
  loc->add_option("--noise", loc_args.noise_path, "noise model (JSON)");
  loc->add_option("--sigma2", loc_args.sigma2, "known gaussian variance");
  loc->add_option("--window-w", loc_args.window_w, "window width (cells)");
  loc->add_option("--window-h", loc_args.window_h, "window height (cells)");
  loc->add_option("--dump-posterior", loc_args.posterior_dump, "posterior dump path");

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "run a full experiment");
  run->add_option("config", run_args.config, "experiment config (JSON)")->required();
  run->add_option("-o,--out", run_args.out_path, "report output path")->required();
  run->add_option("--format", run_args.format, "csv|json (default: by extension)");
  run->add_option("--threads", run_args.threads, "OpenMP worker count");

  ImportArgs import_args;
  CLI::App* imp = app.add_subcommand("import-raster", "import per-Tx PGM rasters");
  imp->add_option("dir", import_args.dir, "directory with maps.json sidecar")->required();
  imp->add_option("-o,--out", import_args.out_path, "output map set (.rms)")->required();

  try {
    app.parse(argc, argv);
    if (*gen) cmd_gen_maps(gen_args);
    if (*train) cmd_train_noise(train_args);
    if (*loc) cmd_locate(loc_args);
    if (*run) cmd_run(run_args);
    if (*imp) cmd_import(import_args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible scenario: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

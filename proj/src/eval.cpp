#include "rmloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "rmloc/errors.hpp"
#include "rmloc/rng.hpp"
#include "rmloc/serialize.hpp"

namespace rmloc {

using nlohmann::json;

namespace {

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t measurement_fingerprint(const Measurement& m) {
  std::string bytes;
  bytes.reserve(m.tx_ids.size() * 12);
  for (int id : m.tx_ids)
    bytes.append(reinterpret_cast<const char*>(&id), sizeof(id));
  for (double r : m.rss)
    bytes.append(reinterpret_cast<const char*>(&r), sizeof(r));
  return fnv1a64(bytes);
}

}  // namespace

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::uniform_full: return "uniform_full";
    case PriorKind::window: return "window";
    case PriorKind::perfect_random: return "perfect_random";
    case PriorKind::perfect_strongest: return "perfect_strongest";
    case PriorKind::approx_strongest: return "approx_strongest";
  }
  throw ConfigError("unknown prior kind");
}

PriorKind prior_kind_from_string(const std::string& s) {
  if (s == "uniform_full") return PriorKind::uniform_full;
  if (s == "window") return PriorKind::window;
  if (s == "perfect_random") return PriorKind::perfect_random;
  if (s == "perfect_strongest") return PriorKind::perfect_strongest;
  if (s == "approx_strongest") return PriorKind::approx_strongest;
  throw ConfigError("unknown prior kind '" + s + "'");
}

std::string EstimatorSpec::name() const {
  switch (kind) {
    case Kind::pme_gaussian:
      return trained ? "pme_g_fit" : "pme_g";
    case Kind::pme_histogram:
      return "pme_h";
    case Kind::knn:
      return "knn_k" + std::to_string(k);
  }
  throw ConfigError("unknown estimator kind");
}

namespace {

PropagationParams propagation_from_json(const json& j) {
  PropagationParams p;
  if (j.contains("ref_level")) p.ref_level = j.at("ref_level").get<double>();
  if (j.contains("exponent")) p.exponent = j.at("exponent").get<double>();
  if (j.contains("wall_penalty")) p.wall_penalty = j.at("wall_penalty").get<double>();
  if (j.contains("car_penalty")) p.car_penalty = j.at("car_penalty").get<double>();
  if (j.contains("noise_floor")) p.noise_floor = j.at("noise_floor").get<double>();
  p.validate();
  return p;
}

json propagation_to_json(const PropagationParams& p) {
  return json{{"ref_level", p.ref_level},
              {"exponent", p.exponent},
              {"wall_penalty", p.wall_penalty},
              {"car_penalty", p.car_penalty},
              {"noise_floor", p.noise_floor}};
}

CityGenParams city_from_json(const json& j) {
  CityGenParams c;
  if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  if (j.contains("width")) c.width = j.at("width").get<int>();
  if (j.contains("height")) c.height = j.at("height").get<int>();
  if (j.contains("cell_size")) c.cell_size = j.at("cell_size").get<double>();
  if (j.contains("block_size")) c.block_size = j.at("block_size").get<int>();
  if (j.contains("building_density"))
    c.building_density = j.at("building_density").get<double>();
  if (j.contains("street_width")) c.street_width = j.at("street_width").get<int>();
  if (j.contains("tx_count")) c.tx_count = j.at("tx_count").get<int>();
  if (j.contains("tx_inner_square"))
    c.tx_inner_square = j.at("tx_inner_square").get<int>();
  if (j.contains("tx_min_separation"))
    c.tx_min_separation = j.at("tx_min_separation").get<int>();
  c.validate();
  return c;
}

json city_to_json(const CityGenParams& c) {
  return json{{"seed", c.seed},
              {"width", c.width},
              {"height", c.height},
              {"cell_size", c.cell_size},
              {"block_size", c.block_size},
              {"building_density", c.building_density},
              {"street_width", c.street_width},
              {"tx_count", c.tx_count},
              {"tx_inner_square", c.tx_inner_square},
              {"tx_min_separation", c.tx_min_separation}};
}

EstimatorSpec estimator_from_json(const json& j) {
  EstimatorSpec e;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "pme_gaussian") {
    e.kind = EstimatorSpec::Kind::pme_gaussian;
    if (j.contains("model")) {
      const std::string model = j.at("model").get<std::string>();
      if (model == "trained")
        e.trained = true;
      else if (model != "known")
        throw ConfigError("estimator model must be 'known' or 'trained'");
    }
    if (j.contains("mu")) e.mu = j.at("mu").get<double>();
    if (j.contains("sigma2")) e.sigma2 = j.at("sigma2").get<double>();
  } else if (kind == "pme_histogram") {
    e.kind = EstimatorSpec::Kind::pme_histogram;
    e.trained = true;
  } else if (kind == "knn") {
    e.kind = EstimatorSpec::Kind::knn;
    if (j.contains("k")) e.k = j.at("k").get<int>();
    if (e.k < 1) throw ConfigError("knn estimator: k must be >= 1");
  } else {
    throw ConfigError("unknown estimator kind '" + kind + "'");
  }
  if (j.contains("model_path"))
    e.model_path = j.at("model_path").get<std::string>();
  return e;
}

json estimator_to_json(const EstimatorSpec& e) {
  json j;
  switch (e.kind) {
    case EstimatorSpec::Kind::pme_gaussian:
      j["kind"] = "pme_gaussian";
      j["model"] = e.trained ? "trained" : "known";
      if (e.mu) j["mu"] = *e.mu;
      if (e.sigma2) j["sigma2"] = *e.sigma2;
      break;
    case EstimatorSpec::Kind::pme_histogram:
      j["kind"] = "pme_histogram";
      break;
    case EstimatorSpec::Kind::knn:
      j["kind"] = "knn";
      j["k"] = e.k;
      break;
  }
  if (e.model_path) j["model_path"] = *e.model_path;
  return j;
}

}  // namespace

namespace {

SyntheticMapsConfig synthetic_from_json(const json& s) {
  SyntheticMapsConfig sc;
  sc.city = city_from_json(s.at("city"));
  sc.estimation = propagation_from_json(s.value("estimation", json::object()));
  sc.measurement = s.contains("measurement")
                       ? propagation_from_json(s.at("measurement"))
                       : sc.estimation;
  sc.car_density = s.value("car_density", 0.0);
  if (sc.car_density < 0.0 || sc.car_density > 1.0)
    throw ConfigError("config: car_density must be in [0, 1]");
  sc.deployments = s.value("deployments", 1);
  if (sc.deployments < 1) throw ConfigError("config: deployments must be >= 1");
  return sc;
}

}  // namespace

SyntheticMapsConfig parse_synthetic_maps_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try {
    const json& s =
        j.contains("maps") ? j.at("maps").at("synthetic") : j;
    return synthetic_from_json(s);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try {
    ExperimentConfig cfg;

    const json& maps = j.at("maps");
    if (maps.contains("synthetic")) {
      cfg.maps = synthetic_from_json(maps.at("synthetic"));
    } else if (maps.contains("files")) {
      const json& f = maps.at("files");
      FileMapsConfig fc;
      fc.estimated_path = f.at("estimated").get<std::string>();
      fc.measured_path = f.value("measured", std::string{});
      cfg.maps = fc;
    } else {
      throw ConfigError("config: maps needs 'synthetic' or 'files'");
    }

    const json& a = j.at("assignment");
    const std::string akind = a.at("kind").get<std::string>();
    if (akind == "random_positive")
      cfg.assignment.kind = AssignmentStrategy::Kind::random_positive;
    else if (akind == "strongest")
      cfg.assignment.kind = AssignmentStrategy::Kind::strongest;
    else
      throw ConfigError("config: unknown assignment kind '" + akind + "'");
    cfg.assignment.n_tx = a.at("n_tx").get<int>();
    if (cfg.assignment.n_tx < 1) throw ConfigError("config: n_tx must be >= 1");
    cfg.assignment.judge_on_noisy = a.value("judge_on_noisy", false);

    const json& n = j.at("noise");
    const std::string nkind = n.at("kind").get<std::string>();
    if (nkind == "gaussian") {
      cfg.noise_kind = NoiseScenario::Kind::gaussian;
      cfg.sigma2 = n.at("sigma2").get<double>();
      if (!(cfg.sigma2 > 0.0)) throw ConfigError("config: sigma2 must be > 0");
    } else if (nkind == "map_mismatch") {
      cfg.noise_kind = NoiseScenario::Kind::map_mismatch;
      // measured maps may be named here instead of under maps.files
      if (n.contains("measured_maps_path")) {
        auto* files = std::get_if<FileMapsConfig>(&cfg.maps);
        if (files == nullptr)
          throw ConfigError("config: measured_maps_path needs file-based maps");
        if (files->measured_path.empty())
          files->measured_path = n.at("measured_maps_path").get<std::string>();
      }
    } else {
      throw ConfigError("config: unknown noise kind '" + nkind + "'");
    }

    if (j.contains("window")) {
      const json& w = j.at("window");
      cfg.window = std::make_pair(w.at("width").get<int>(), w.at("height").get<int>());
    }

    for (const json& p : j.at("priors"))
      cfg.priors.push_back(prior_kind_from_string(p.get<std::string>()));
    if (cfg.priors.empty()) throw ConfigError("config: needs at least one prior");

    for (const json& e : j.at("estimators"))
      cfg.estimators.push_back(estimator_from_json(e));
    if (cfg.estimators.empty())
      throw ConfigError("config: needs at least one estimator");

    cfg.trials = j.value("trials", 200);
    if (cfg.trials < 1) throw ConfigError("config: trials must be >= 1");
    cfg.train_ratio = j.value("train_ratio", 0.85);
    if (cfg.train_ratio < 0.0 || cfg.train_ratio > 1.0)
      throw ConfigError("config: train_ratio must be in [0, 1]");
    cfg.seed = j.value("seed", 1ull);
    cfg.per_map_rows = j.value("per_map_rows", false);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  if (const auto* s = std::get_if<SyntheticMapsConfig>(&cfg.maps)) {
    j["maps"] = json{{"synthetic",
                      json{{"city", city_to_json(s->city)},
                           {"estimation", propagation_to_json(s->estimation)},
                           {"measurement", propagation_to_json(s->measurement)},
                           {"car_density", s->car_density},
                           {"deployments", s->deployments}}}};
  } else {
    const auto& f = std::get<FileMapsConfig>(cfg.maps);
    j["maps"] = json{{"files", json{{"estimated", f.estimated_path},
                                    {"measured", f.measured_path}}}};
  }
  j["assignment"] =
      json{{"kind", cfg.assignment.kind == AssignmentStrategy::Kind::random_positive
                        ? "random_positive"
                        : "strongest"},
           {"n_tx", cfg.assignment.n_tx},
           {"judge_on_noisy", cfg.assignment.judge_on_noisy}};
  if (cfg.noise_kind == NoiseScenario::Kind::gaussian)
    j["noise"] = json{{"kind", "gaussian"}, {"sigma2", cfg.sigma2}};
  else
    j["noise"] = json{{"kind", "map_mismatch"}};
  if (cfg.window)
    j["window"] = json{{"width", cfg.window->first}, {"height", cfg.window->second}};
  json priors = json::array();
  for (PriorKind p : cfg.priors) priors.push_back(to_string(p));
  j["priors"] = priors;
  json estimators = json::array();
  for (const EstimatorSpec& e : cfg.estimators) estimators.push_back(estimator_to_json(e));
  j["estimators"] = estimators;
  j["trials"] = cfg.trials;
  j["train_ratio"] = cfg.train_ratio;
  j["seed"] = cfg.seed;
  j["per_map_rows"] = cfg.per_map_rows;
  return j.dump();
}

std::pair<double, double> compute_metrics(std::span<const Vec2> errors) {
  if (errors.empty()) throw ConfigError("compute_metrics: empty error list");
  double sum = 0.0, sum2 = 0.0;
  for (const Vec2& e : errors) {
    const double d2 = e.x * e.x + e.y * e.y;
    sum += std::sqrt(d2);
    sum2 += d2;
  }
  const double n = static_cast<double>(errors.size());
  return {sum / n, std::sqrt(sum2 / n)};
}

namespace {

struct Deployment {
  RadioMapSet est;
  std::optional<RadioMapSet> meas;
};

std::vector<Deployment> materialize_maps(const ExperimentConfig& cfg, Exec exec) {
  std::vector<Deployment> deps;
  if (const auto* s = std::get_if<SyntheticMapsConfig>(&cfg.maps)) {
    const bool needs_measured =
        cfg.noise_kind == NoiseScenario::Kind::map_mismatch;
    for (int d = 0; d < s->deployments; ++d) {
      CityGenParams city = s->city;
      city.seed = derive_seed(s->city.seed, static_cast<uint64_t>(d));
      Deployment dep;
      if (needs_measured) {
        ScenarioMaps maps = generate_scenario_maps(city, s->estimation,
                                                   s->measurement, s->car_density,
                                                   exec);
        dep.est = std::move(maps.estimated);
        dep.meas = std::move(maps.measured);
      } else {
        auto [env, txs] = generate_environment(city);
        dep.est = simulate_radio_map_set(env, txs, s->estimation, exec);
      }
      deps.push_back(std::move(dep));
    }
  } else {
    const auto& f = std::get<FileMapsConfig>(cfg.maps);
    Deployment dep;
    dep.est = load_radio_map_set(f.estimated_path);
    if (!f.measured_path.empty()) {
      dep.meas = load_radio_map_set(f.measured_path);
      if (dep.meas->geometry != dep.est.geometry ||
          dep.meas->tx_count() != dep.est.tx_count())
        throw FormatError("measured maps do not match estimated maps");
    }
    if (cfg.noise_kind == NoiseScenario::Kind::map_mismatch && !dep.meas)
      throw ConfigError("map_mismatch scenario needs measured maps");
    deps.push_back(std::move(dep));
  }
  return deps;
}

struct ResolvedPrior {
  Prior prior;
  CellSet support;  // kNN candidate set, built once
  explicit ResolvedPrior(Prior p) : prior(std::move(p)), support(prior.support()) {}
};

struct TrialRecord {
  Cell rx;
  std::vector<int> tx_ids;
  Measurement m;
  uint64_t fingerprint = 0;
};

}  // namespace

ExperimentErrors run_experiment_errors(const ExperimentConfig& cfg, Exec exec) {
  if (cfg.trials < 1) throw ConfigError("run_experiment: trials must be >= 1");
  if (cfg.estimators.empty())
    throw ConfigError("run_experiment: needs at least one estimator");
  if (cfg.priors.empty())
    throw ConfigError("run_experiment: needs at least one prior");
  const bool strongest =
      cfg.assignment.kind == AssignmentStrategy::Kind::strongest;
  for (PriorKind p : cfg.priors)
    if (p == PriorKind::perfect_strongest && !strongest)
      throw ConfigError("run_experiment: perfect_strongest needs strongest assignment");
  if (cfg.assignment.judge_on_noisy &&
      (cfg.noise_kind != NoiseScenario::Kind::gaussian || !strongest))
    throw ConfigError("run_experiment: judge_on_noisy needs gaussian noise and strongest assignment");

  // Histogram models are always data-fit; gaussian ones only when asked.
  const auto requires_training = [](const EstimatorSpec& e) {
    return !e.model_path &&
           (e.trained || e.kind == EstimatorSpec::Kind::pme_histogram);
  };
  const bool needs_training =
      std::any_of(cfg.estimators.begin(), cfg.estimators.end(), requires_training);

  std::vector<Deployment> deps = materialize_maps(cfg, exec);
  const int n_deps = static_cast<int>(deps.size());

  int n_train = static_cast<int>(std::floor(cfg.train_ratio * n_deps));
  n_train = std::min(n_train, n_deps - 1);
  if (needs_training) {
    if (n_train < 1)
      throw ConfigError("run_experiment: trained estimators need at least one "
                        "training deployment (raise train_ratio or deployments)");
    for (int d = 0; d < n_train; ++d)
      if (!deps[d].meas)
        throw ConfigError("run_experiment: training needs measured maps");
  }

  // Trained noise models are fit on the training split only.
  std::optional<GaussianNoiseModel> fitted_gaussian;
  std::optional<HistogramNoiseModel> fitted_histogram;
  if (needs_training) {
    MismatchSamples samples;
    for (int d = 0; d < n_train; ++d)
      samples.add(deps[d].est, *deps[d].meas, CellSet::full(deps[d].est.geometry));
    for (const EstimatorSpec& e : cfg.estimators) {
      if (!requires_training(e)) continue;
      if (e.kind == EstimatorSpec::Kind::pme_gaussian && !fitted_gaussian)
        fitted_gaussian = samples.fit_gaussian();
      if (e.kind == EstimatorSpec::Kind::pme_histogram && !fitted_histogram)
        fitted_histogram = samples.fit_histogram();
    }
  }

  // Per-estimator noise models (knn entries stay empty).
  std::vector<std::optional<NoiseModel>> models(cfg.estimators.size());
  for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
    const EstimatorSpec& spec = cfg.estimators[e];
    if (spec.kind == EstimatorSpec::Kind::knn) continue;
    if (spec.model_path) {
      models[e] = load_noise_model(*spec.model_path);
      const bool is_gaussian = std::holds_alternative<GaussianNoiseModel>(*models[e]);
      if (is_gaussian != (spec.kind == EstimatorSpec::Kind::pme_gaussian))
        throw ConfigError("run_experiment: model file kind does not match estimator");
    } else if (spec.kind == EstimatorSpec::Kind::pme_gaussian) {
      if (spec.trained) {
        models[e] = *fitted_gaussian;
      } else {
        GaussianNoiseModel g;
        g.mu = spec.mu.value_or(0.0);
        if (spec.sigma2)
          g.sigma2 = *spec.sigma2;
        else if (cfg.noise_kind == NoiseScenario::Kind::gaussian)
          g.sigma2 = cfg.sigma2;
        else
          throw ConfigError("run_experiment: known-sigma2 pme_gaussian needs "
                            "an explicit sigma2 outside the gaussian scenario");
        if (!(g.sigma2 > 0.0)) throw ConfigError("run_experiment: sigma2 must be > 0");
        models[e] = g;
      }
    } else {
      models[e] = *fitted_histogram;
    }
  }

  const std::size_t n_rows = cfg.estimators.size() * cfg.priors.size();
  ExperimentErrors out;
  out.n_tx = cfg.assignment.n_tx;
  out.seed = cfg.seed;
  out.config_fingerprint = fnv1a64(experiment_config_to_json(cfg));
  out.errors.assign(n_rows, {});
  for (const EstimatorSpec& e : cfg.estimators)
    for (PriorKind p : cfg.priors) {
      out.estimator_names.push_back(e.name());
      out.prior_names.push_back(to_string(p));
    }

  for (int d = n_train; d < n_deps; ++d) {
    const Deployment& dep = deps[d];
    const RadioMapSet& est_maps = dep.est;
    const RadioMapSet& assign_maps =
        cfg.noise_kind == NoiseScenario::Kind::map_mismatch ? *dep.meas : dep.est;

    const CellSet window_set =
        cfg.window ? window_mask(est_maps.geometry, cfg.window->first,
                                 cfg.window->second)
                   : CellSet::full(est_maps.geometry);

    const std::vector<Cell> eligible =
        eligible_cells(assign_maps, window_set, cfg.assignment.n_tx);
    if (eligible.empty()) {
      std::cerr << "run_experiment: deployment " << d
                << " has no eligible rx cells, skipping\n";
      continue;
    }

    NoiseScenario scenario;
    scenario.kind = cfg.noise_kind;
    scenario.sigma2 = cfg.sigma2;
    scenario.measured_maps = dep.meas ? &*dep.meas : nullptr;

    // Pass 1 (serial): sample every trial's rx, assignment and measurement.
    const uint64_t dep_seed = derive_seed(cfg.seed, static_cast<uint64_t>(d));
    std::vector<TrialRecord> trials(cfg.trials);
    for (int t = 0; t < cfg.trials; ++t) {
      TrialRecord& rec = trials[t];
      const uint64_t ts = derive_seed(dep_seed, static_cast<uint64_t>(t));
      rec.rx = sample_rx(eligible, derive_seed(ts, 0));
      if (cfg.assignment.kind == AssignmentStrategy::Kind::random_positive) {
        rec.tx_ids = assign_random_tx(assign_maps, rec.rx, cfg.assignment.n_tx,
                                      derive_seed(ts, 1));
        rec.m = measure(scenario, est_maps, rec.rx, rec.tx_ids, derive_seed(ts, 2));
      } else if (cfg.assignment.judge_on_noisy) {
        rec.m = measure_strongest_noisy(est_maps, rec.rx, cfg.assignment.n_tx,
                                        cfg.sigma2, derive_seed(ts, 2));
        rec.tx_ids = rec.m.tx_ids;
      } else {
        rec.tx_ids = assign_strongest_tx(assign_maps, rec.rx, cfg.assignment.n_tx);
        rec.m = measure(scenario, est_maps, rec.rx, rec.tx_ids, derive_seed(ts, 2));
      }
      rec.fingerprint = measurement_fingerprint(rec.m);
    }

    // Static priors once per deployment, measurement-dependent priors once
    // per distinct reported Tx list.
    std::map<PriorKind, ResolvedPrior> static_priors;
    for (PriorKind p : cfg.priors) {
      switch (p) {
        case PriorKind::uniform_full:
          static_priors.emplace(p, ResolvedPrior(uniform_prior(CellSet::full(est_maps.geometry))));
          break;
        case PriorKind::window:
          static_priors.emplace(p, ResolvedPrior(uniform_prior(window_set)));
          break;
        case PriorKind::perfect_random:
          static_priors.emplace(p, ResolvedPrior(perfect_prior_random(
                                       assign_maps, window_set, cfg.assignment.n_tx)));
          break;
        default:
          break;
      }
    }
    const bool wants_perfect_strongest =
        std::find(cfg.priors.begin(), cfg.priors.end(), PriorKind::perfect_strongest) !=
        cfg.priors.end();
    const bool wants_approx =
        std::find(cfg.priors.begin(), cfg.priors.end(), PriorKind::approx_strongest) !=
        cfg.priors.end();
    std::map<std::vector<int>, ResolvedPrior> perfect_strongest_cache;
    std::map<std::vector<int>, ResolvedPrior> approx_cache;
    for (const TrialRecord& rec : trials) {
      if (wants_perfect_strongest && !perfect_strongest_cache.contains(rec.tx_ids))
        perfect_strongest_cache.emplace(
            rec.tx_ids,
            ResolvedPrior(perfect_prior_strongest(assign_maps, window_set, rec.tx_ids)));
      if (wants_approx && !approx_cache.contains(rec.tx_ids))
        approx_cache.emplace(
            rec.tx_ids,
            ResolvedPrior(approx_prior_strongest(est_maps, window_set, rec.tx_ids)));
    }

    auto prior_for = [&](PriorKind p, const TrialRecord& rec) -> const ResolvedPrior& {
      switch (p) {
        case PriorKind::perfect_strongest:
          return perfect_strongest_cache.at(rec.tx_ids);
        case PriorKind::approx_strongest:
          return approx_cache.at(rec.tx_ids);
        default:
          return static_priors.at(p);
      }
    };

    // Pass 2: estimation. Trials are independent; the error slot layout is
    // fixed up front so the parallel loop is write-disjoint and the result
    // does not depend on the worker count.
    const std::size_t base = out.errors[0].size();
    for (std::size_t r = 0; r < n_rows; ++r)
      out.errors[r].resize(base + cfg.trials);
    out.trial_map.resize(base + cfg.trials, d);

    const auto evaluate_trial = [&](int t) {
      const TrialRecord& rec = trials[t];
      std::size_t row = 0;
      for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
        const EstimatorSpec& spec = cfg.estimators[e];
        for (PriorKind p : cfg.priors) {
          if (measurement_fingerprint(rec.m) != rec.fingerprint)
            throw std::logic_error("run_experiment: measurement changed between rows");
          const ResolvedPrior& prior = prior_for(p, rec);
          PositionEstimate est;
          if (spec.kind == EstimatorSpec::Kind::knn) {
            est = knn_locate(rec.m, est_maps, prior.support, spec.k);
          } else {
            est = pme_locate(
                posterior(rec.m, est_maps, prior.prior, *models[e], Exec::serial));
          }
          out.errors[row][base + t] =
              Vec2{est.x - rec.rx.x, est.y - rec.rx.y};
          ++row;
        }
      }
    };

    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
      for (int t = 0; t < cfg.trials; ++t) evaluate_trial(t);
    } else {
      for (int t = 0; t < cfg.trials; ++t) evaluate_trial(t);
    }
  }

  if (out.errors[0].empty())
    throw InfeasibleError("run_experiment: every test deployment was infeasible");
  return out;
}

EvalReport run_experiment(const ExperimentConfig& cfg, Exec exec) {
  const ExperimentErrors errs = run_experiment_errors(cfg, exec);
  EvalReport report;
  report.config_fingerprint = errs.config_fingerprint;
  for (std::size_t r = 0; r < errs.errors.size(); ++r) {
    const auto [mae, rmse] = compute_metrics(errs.errors[r]);
    report.rows.push_back(EvalRow{errs.estimator_names[r], errs.prior_names[r],
                                  errs.n_tx, mae, rmse,
                                  static_cast<int64_t>(errs.errors[r].size()),
                                  errs.seed});
  }
  if (cfg.per_map_rows) {
    // Pooled rows first, then one row per (row, deployment) slice.
    std::vector<int> dep_ids;
    for (int d : errs.trial_map)
      if (std::find(dep_ids.begin(), dep_ids.end(), d) == dep_ids.end())
        dep_ids.push_back(d);
    for (std::size_t r = 0; r < errs.errors.size(); ++r) {
      for (int d : dep_ids) {
        std::vector<Vec2> slice;
        for (std::size_t t = 0; t < errs.errors[r].size(); ++t)
          if (errs.trial_map[t] == d) slice.push_back(errs.errors[r][t]);
        const auto [mae, rmse] = compute_metrics(slice);
        report.rows.push_back(EvalRow{
            errs.estimator_names[r] + "@map" + std::to_string(d),
            errs.prior_names[r], errs.n_tx, mae, rmse,
            static_cast<int64_t>(slice.size()), errs.seed});
      }
    }
  }
  return report;
}

bool operator==(const EvalRow& a, const EvalRow& b) {
  return a.estimator == b.estimator && a.prior == b.prior && a.n_tx == b.n_tx &&
         a.mae == b.mae && a.rmse == b.rmse && a.trials == b.trials &&
         a.seed == b.seed;
}

namespace {

void check_row_invariants(const EvalReport& report) {
  for (const EvalRow& row : report.rows) {
    if (row.mae < 0.0 || row.rmse < 0.0 ||
        row.rmse < row.mae * (1.0 - 1e-12) - 1e-12)
      throw std::logic_error("report row violates RMSE >= MAE >= 0: " +
                             row.estimator + "/" + row.prior);
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string report_to_csv(const EvalReport& report) {
  check_row_invariants(report);
  std::string out = "estimator,prior,n_tx,mae,rmse,trials,seed\n";
  for (const EvalRow& r : report.rows) {
    out += r.estimator + "," + r.prior + "," + std::to_string(r.n_tx) + "," +
           format_double(r.mae) + "," + format_double(r.rmse) + "," +
           std::to_string(r.trials) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

std::string report_to_json(const EvalReport& report) {
  check_row_invariants(report);
  char fp[32];
  std::snprintf(fp, sizeof(fp), "0x%016llx",
                static_cast<unsigned long long>(report.config_fingerprint));
  json rows = json::array();
  for (const EvalRow& r : report.rows)
    rows.push_back(json{{"estimator", r.estimator},
                        {"prior", r.prior},
                        {"n_tx", r.n_tx},
                        {"mae", r.mae},
                        {"rmse", r.rmse},
                        {"trials", r.trials},
                        {"seed", r.seed}});
  return json{{"config_fingerprint", fp}, {"rows", rows}}.dump(2);
}

void emit_report(const EvalReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << (format == ReportFormat::csv ? report_to_csv(report)
                                    : report_to_json(report));
  if (format == ReportFormat::json) f << "\n";
  if (!f) throw IoError("write failed: " + path.string());
}

EvalReport load_report_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
  try {
    EvalReport report;
    report.config_fingerprint =
        std::stoull(j.at("config_fingerprint").get<std::string>(), nullptr, 16);
    for (const json& r : j.at("rows"))
      report.rows.push_back(EvalRow{r.at("estimator").get<std::string>(),
                                    r.at("prior").get<std::string>(),
                                    r.at("n_tx").get<int>(),
                                    r.at("mae").get<double>(),
                                    r.at("rmse").get<double>(),
                                    r.at("trials").get<int64_t>(),
                                    r.at("seed").get<uint64_t>()});
    return report;
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

}  // namespace rmloc

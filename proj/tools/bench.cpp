// Benchmark comparing the serial reference kernels against the OpenMP
// parallel ones: posterior scoring over a full-grid prior and per-Tx radio
// map simulation. Outputs min-of-N timings, the speedup, and the maximum
// deviation between the two paths (which must be exactly zero).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <omp.h>
#include <string>

#include "rmloc/estimators.hpp"
#include "rmloc/rng.hpp"
#include "rmloc/synthgen.hpp"

using namespace rmloc;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double min_time(int iters, F&& fn) {
  double best = 1e30;
  for (int i = 0; i < iters; ++i) {
    const double t0 = now_seconds();
    fn();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int grid = 256;
  int n_tx = 5;
  int iters = 5;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg.rfind("--grid=", 0) == 0) grid = std::stoi(arg.substr(7));
    else if (arg.rfind("--tx=", 0) == 0) n_tx = std::stoi(arg.substr(5));
    else if (arg.rfind("--iters=", 0) == 0) iters = std::stoi(arg.substr(8));
    else {
      std::fprintf(stderr, "usage: rmloc_bench [--grid=N] [--tx=N] [--iters=N]\n");
      return 1;
    }
  }

  int threads = 1;
#pragma omp parallel
  {
#pragma omp single
    threads = omp_get_num_threads();
  }
  std::printf("grid %dx%d, %d tx, %d OpenMP threads\n", grid, grid, n_tx, threads);

  CityGenParams city;
  city.seed = 42;
  city.width = grid;
  city.height = grid;
  city.block_size = std::max(4, grid / 9);
  city.street_width = std::max(1, grid / 32);
  city.tx_count = n_tx;
  city.tx_inner_square = std::max(grid / 2, std::min(grid, 3 * city.tx_min_separation * n_tx));
  city.tx_inner_square = std::min(city.tx_inner_square, grid);
  PropagationParams prop;
  prop.ref_level = 200;
  prop.exponent = 30;
  prop.wall_penalty = 20;

  auto [env, txs] = generate_environment(city);

  // --- radio map simulation: serial vs parallel over Tx ---
  RadioMapSet maps_serial, maps_parallel;
  const double sim_serial = min_time(iters, [&] {
    maps_serial = simulate_radio_map_set(env, txs, prop, Exec::serial);
  });
  const double sim_parallel = min_time(iters, [&] {
    maps_parallel = simulate_radio_map_set(env, txs, prop, Exec::parallel);
  });
  const bool sim_equal = maps_serial == maps_parallel;
  std::printf("[simulate %2d planes]  serial %8.3f ms   omp %8.3f ms   %.2fx   %s\n",
              n_tx, sim_serial * 1e3, sim_parallel * 1e3, sim_serial / sim_parallel,
              sim_equal ? "bit-identical" : "MISMATCH");

  // --- posterior scoring over a full-grid prior ---
  const Prior prior = uniform_prior(CellSet::full(maps_serial.geometry));
  Rng rng(7);
  Measurement m;
  const Cell rx{grid / 2, grid / 2};
  for (int t = 0; t < n_tx; ++t) {
    m.tx_ids.push_back(t);
    m.rss.push_back(rss_at(maps_serial, t, rx) + rng.normal(0.0, 2.0));
  }
  const NoiseModel noise = GaussianNoiseModel{0.0, 5.0};

  Posterior post_serial, post_parallel;
  const double post_serial_t = min_time(iters, [&] {
    post_serial = posterior(m, maps_serial, prior, noise, Exec::serial);
  });
  const double post_parallel_t = min_time(iters, [&] {
    post_parallel = posterior(m, maps_serial, prior, noise, Exec::parallel);
  });
  double max_dev = 0.0;
  for (std::size_t i = 0; i < post_serial.mass.size(); ++i)
    max_dev = std::max(max_dev, std::abs(post_serial.mass[i] - post_parallel.mass[i]));
  std::printf("[posterior %6zu c]  serial %8.3f ms   omp %8.3f ms   %.2fx   max dev %g\n",
              post_serial.mass.size(), post_serial_t * 1e3, post_parallel_t * 1e3,
              post_serial_t / post_parallel_t, max_dev);

  const PositionEstimate est = pme_locate(post_serial);
  std::printf("estimate (%.3f, %.3f), truth (%d, %d)\n", est.x, est.y, rx.x, rx.y);

  return (sim_equal && max_dev == 0.0) ? 0 : 1;
}

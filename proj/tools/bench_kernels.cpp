// Timing comparison of the OpenMP kernels against their serial references.

#include <chrono>
#include <cstdio>

#include "mobcount/experiments.hpp"

using namespace mobcount;
using clk = std::chrono::steady_clock;

static double seconds_since(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}

int main() {
  const ExperimentConfig cfg = reference_experiment_config();
  Rng rng(derive_seed(cfg.master_seed, {1, 0}));
  const std::vector<double> counters =
      place_counters(cfg.counters.density, cfg.counters.count, rng);

  auto t0 = clk::now();
  const AttendanceTable par =
      attendance_table(cfg.journeys, cfg.grid, counters, cfg.quad);
  const double t_par = seconds_since(t0);
  t0 = clk::now();
  const AttendanceTable ser =
      attendance_table_serial(cfg.journeys, cfg.grid, counters, cfg.quad);
  const double t_ser = seconds_since(t0);
  bool same = par.values == ser.values;
  std::printf("attendance_table  parallel %.3fs  serial %.3fs  speedup %.2fx  identical %s\n",
              t_par, t_ser, t_ser / t_par, same ? "yes" : "NO");

  std::vector<long long> n;
  for (double v : cfg.true_N) n.push_back(static_cast<long long>(v) / 10);
  t0 = clk::now();
  const CountDataset dpar =
      simulate_day(cfg.journeys, n, counters, cfg.grid, cfg.master_seed);
  const double s_par = seconds_since(t0);
  t0 = clk::now();
  const CountDataset dser =
      simulate_day_serial(cfg.journeys, n, counters, cfg.grid, cfg.master_seed);
  const double s_ser = seconds_since(t0);
  same = dpar.counts == dser.counts && dpar.hidden == dser.hidden;
  std::printf("simulate_day      parallel %.3fs  serial %.3fs  speedup %.2fx  identical %s\n",
              s_par, s_ser, s_ser / s_par, same ? "yes" : "NO");
  return 0;
}

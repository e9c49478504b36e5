#ifndef MOBCOUNT_EXPERIMENTS_HPP
#define MOBCOUNT_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mobcount/em.hpp"

namespace mobcount {

struct CounterConfig {
  int count = 50;
  Density1D density = Density1D::uniform(0.0, 1.0);
  bool resample_per_replicate = true;
};

enum class Generator { Trajectory, Poisson };

struct DayLaw {
  enum class Kind { Fixed, Lognormal };
  Kind kind = Kind::Lognormal;
  double sigma = 0.1;  // lognormal log-sd around the base sizes
};

struct ExperimentConfig {
  double x_l = 0.0, x_r = 1.0;
  TimeGrid grid;
  std::vector<JourneyTypeSpec> journeys;
  std::vector<double> true_N;
  CounterConfig counters;
  int replicates = 1;
  Generator generator = Generator::Poisson;
  EmConfig em;
  QuadratureSpec quad;
  std::uint64_t master_seed = 0;
  double level = 0.95;

  int days = 300;  // multi-day simulation horizon
  DayLaw day_law;

  std::vector<int> ladder = {5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
  int ladder_replicates = 50;

  int dense_locations = 512;

  std::vector<std::pair<std::string, Density1D>> strategies;

  void validate() const;
};

// Parses the structured-text config; throws ConfigError on any problem.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config_json(const std::string& text);

// The four-journey, 50-counter, 24-hour setup used across the experiment
// suite; built in code so tests do not depend on config files.
ExperimentConfig reference_experiment_config();

// J independent draws from the counter density, sorted ascending.
std::vector<double> place_counters(const Density1D& density, int count, Rng& rng);

// Tabulated densities proportional to cos(pi x)^4 (boundary-weighted) and
// sin(pi x)^4 (center-weighted) on [0, 1].
Density1D boundary_weighted_density(int n_knots = 512);
Density1D center_weighted_density(int n_knots = 512);

// ---- experiment commands -------------------------------------------------
// Each command writes its outputs plus a manifest.json (path -> FNV-1a hash)
// under `out`; all randomness derives from config.master_seed.

void cmd_attendance(const ExperimentConfig& cfg, const std::filesystem::path& out);

void cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct EstimateReport {
  EmState em;
  double score_inf_norm = 0.0;
  FisherMatrix fisher;
  ConfidenceEllipsoid ellipsoid;
};
EstimateReport cmd_estimate(const ExperimentConfig& cfg,
                            const std::filesystem::path& counts_csv,
                            const std::filesystem::path& table_csv,
                            const std::filesystem::path& out);

struct ConsistencyRow {
  int n_counters = 0;
  std::string journey;
  double q05, q25, q50, q75, q95;  // MLE quantiles over replicates
  double median_rel_error;
  double rmse;
};
std::vector<ConsistencyRow> cmd_consistency(const ExperimentConfig& cfg,
                                            const std::filesystem::path& out);

struct StrategyReport {
  std::string label;
  ConfidenceEllipsoid ellipsoid;
  std::vector<double> slice_areas;  // pairs (k, k2), k < k2, row-major
  double shape_determinant = 0.0;
};
std::vector<StrategyReport> cmd_strategies(const ExperimentConfig& cfg,
                                           const std::filesystem::path& out);

struct PdeCheckRow {
  std::string journey;
  std::string direction;
  double h, residual, ratio;  // ratio = residual(2h) / residual(h)
};
std::vector<PdeCheckRow> cmd_pde_check(const ExperimentConfig& cfg,
                                       const std::filesystem::path& out);

// FNV-1a 64 content hash used in run manifests.
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

}  // namespace mobcount

#endif

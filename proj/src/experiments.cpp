#include "mobcount/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace mobcount {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---- manifest ------------------------------------------------------------

struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::uint64_t>> files;

  void add(const std::filesystem::path& out, const std::string& rel) {
    files.emplace_back(rel, fnv1a64_file(out / rel));
  }
  void write(const std::filesystem::path& out) const {
    json j;
    j["command"] = command;
    j["seed"] = seed;
    j["files"] = json::array();
    for (const auto& [rel, h] : files) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%016llx",
                    static_cast<unsigned long long>(h));
      j["files"].push_back({{"path", rel}, {"fnv1a64", buf}});
    }
    std::ofstream os(out / "manifest.json");
    os << j.dump(2) << '\n';
  }
};

void ensure_dir(const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string());
}

template <class Writer>
void write_file(const std::filesystem::path& out, const std::string& rel,
                Manifest& m, Writer&& w) {
  const std::filesystem::path p = out / rel;
  ensure_dir(p.parent_path());
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot open output file " + p.string());
  w(os);
  os.close();
  m.add(out, rel);
}

// ---- config parsing ------------------------------------------------------

[[noreturn]] void bad(const std::string& what) { throw ConfigError("config: " + what); }

double need_num(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) bad(std::string(key) + " missing or not a number");
  return j[key].get<double>();
}

double num_or(const json& j, const char* key, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number()) bad(std::string(key) + " not a number");
  return j[key].get<double>();
}

std::string str_or(const json& j, const char* key, const std::string& dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_string()) bad(std::string(key) + " not a string");
  return j[key].get<std::string>();
}

std::vector<double> need_vec(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) bad(std::string(key) + " missing or not an array");
  std::vector<double> v;
  for (const auto& e : j[key]) {
    if (!e.is_number()) bad(std::string(key) + " has a non-numeric entry");
    v.push_back(e.get<double>());
  }
  return v;
}

Density1D parse_density(const json& j) {
  if (!j.is_object()) bad("density is not an object");
  const std::string kind = str_or(j, "kind", "");
  if (kind == "uniform") {
    return Density1D::uniform(need_num(j, "lo"), need_num(j, "hi"));
  } else if (kind == "gaussian_mixture") {
    return Density1D::truncated_gaussian_mixture(
        need_vec(j, "weights"), need_vec(j, "means"), need_vec(j, "sds"),
        need_num(j, "lo"), need_num(j, "hi"));
  } else if (kind == "piecewise_linear") {
    return Density1D::piecewise_linear(need_vec(j, "knots"), need_vec(j, "values"));
  } else if (kind == "dirac") {
    return Density1D::dirac(need_num(j, "atom"));
  } else if (kind == "boundary_weighted") {
    return boundary_weighted_density(
        static_cast<int>(num_or(j, "knots", 512)));
  } else if (kind == "center_weighted") {
    return center_weighted_density(static_cast<int>(num_or(j, "knots", 512)));
  }
  bad("unknown density kind '" + kind + "'");
}

ConditionalSchedule parse_schedule(const json& j) {
  if (!j.is_object() || !j.contains("base")) bad("schedule needs a 'base' density");
  return ConditionalSchedule(parse_density(j["base"]), num_or(j, "shift_slope", 0.0));
}

JourneyTypeSpec parse_journey(const json& j) {
  if (!j.is_object()) bad("journey entry is not an object");
  const std::string variant = str_or(j, "variant", "starting_time");
  ScheduleVariant v;
  if (variant == "starting_time")
    v = ScheduleVariant::StartingTime;
  else if (variant == "arrival_time")
    v = ScheduleVariant::ArrivalTime;
  else
    bad("unknown schedule variant '" + variant + "'");
  for (const char* key : {"velocity", "origin", "destination", "schedule"})
    if (!j.contains(key)) bad(std::string("journey missing '") + key + "'");
  return JourneyTypeSpec{str_or(j, "label", "journey"), v,
                         parse_density(j["velocity"]), parse_density(j["origin"]),
                         parse_density(j["destination"]), parse_schedule(j["schedule"])};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(x_r > x_l)) throw ConfigError("config: x_r must exceed x_l");
  grid.validate();
  quad.validate();
  em.validate();
  if (journeys.size() != true_N.size())
    throw ConfigError("config: true_N size must match the journey list");
  for (double n : true_N)
    if (!(n >= 0.0) || !std::isfinite(n))
      throw ConfigError("config: true_N entries must be finite and >= 0");
  for (const auto& spec : journeys) spec.validate(x_l, x_r);
  if (counters.count < 1) throw ConfigError("config: counters.count >= 1 required");
  if (replicates < 1) throw ConfigError("config: replicates >= 1 required");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("config: level must be in (0, 1)");
  if (days < 1) throw ConfigError("config: days >= 1 required");
  if (!(day_law.sigma >= 0.0)) throw ConfigError("config: day sigma must be >= 0");
  if (ladder.empty()) throw ConfigError("config: ladder must not be empty");
  for (int s : ladder)
    if (s < 1) throw ConfigError("config: ladder sizes must be >= 1");
  if (ladder_replicates < 2)
    throw ConfigError("config: ladder_replicates >= 2 required");
  if (dense_locations < 2) throw ConfigError("config: dense_locations >= 2 required");
}

ExperimentConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("top level must be an object");

  ExperimentConfig cfg;
  if (j.contains("domain")) {
    cfg.x_l = need_num(j["domain"], "x_l");
    cfg.x_r = need_num(j["domain"], "x_r");
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    cfg.grid.t_start = num_or(g, "t_start", 0.0);
    cfg.grid.n_steps = static_cast<int>(num_or(g, "n_steps", 24));
    cfg.grid.step = num_or(g, "step", 1.0);
  }
  if (j.contains("quadrature")) {
    const json& q = j["quadrature"];
    const std::string scheme = str_or(q, "scheme", "gauss");
    if (scheme == "gauss") {
      cfg.quad.scheme = QuadratureSpec::Scheme::GaussLegendreComposite;
      cfg.quad.panels = static_cast<int>(num_or(q, "panels", 32));
      cfg.quad.order = static_cast<int>(num_or(q, "order", 8));
    } else if (scheme == "trapezoid") {
      cfg.quad.scheme = QuadratureSpec::Scheme::Trapezoid;
      cfg.quad.n = static_cast<int>(num_or(q, "n", 128));
    } else {
      bad("unknown quadrature scheme '" + scheme + "'");
    }
  }
  if (j.contains("journeys")) {
    if (!j["journeys"].is_array()) bad("journeys must be an array");
    for (const auto& e : j["journeys"]) cfg.journeys.push_back(parse_journey(e));
  }
  if (j.contains("true_N")) cfg.true_N = need_vec(j, "true_N");
  if (j.contains("counters")) {
    const json& c = j["counters"];
    cfg.counters.count = static_cast<int>(num_or(c, "count", 50));
    if (c.contains("density")) cfg.counters.density = parse_density(c["density"]);
    if (c.contains("resample_per_replicate")) {
      if (!c["resample_per_replicate"].is_boolean())
        bad("counters.resample_per_replicate must be a boolean");
      cfg.counters.resample_per_replicate = c["resample_per_replicate"].get<bool>();
    }
  }
  cfg.replicates = static_cast<int>(num_or(j, "replicates", 1));
  const std::string gen = str_or(j, "generator", "poisson");
  if (gen == "poisson")
    cfg.generator = Generator::Poisson;
  else if (gen == "trajectory")
    cfg.generator = Generator::Trajectory;
  else
    bad("unknown generator '" + gen + "'");
  if (j.contains("em")) {
    const json& e = j["em"];
    cfg.em.rel_tol = num_or(e, "rel_tol", cfg.em.rel_tol);
    cfg.em.max_iters = static_cast<int>(num_or(e, "max_iters", cfg.em.max_iters));
    const std::string init = str_or(e, "init", "uniform_split");
    if (init == "uniform_split")
      cfg.em.init = EmConfig::Init::UniformSplit;
    else if (init == "random_split")
      cfg.em.init = EmConfig::Init::RandomSplit;
    else if (init == "custom")
      cfg.em.init = EmConfig::Init::Custom;
    else
      bad("unknown em init '" + init + "'");
    if (e.contains("custom_nu")) cfg.em.custom_nu = need_vec(e, "custom_nu");
  }
  cfg.master_seed = static_cast<std::uint64_t>(num_or(j, "seed", 0));
  cfg.level = num_or(j, "level", 0.95);
  if (j.contains("days")) {
    const json& d = j["days"];
    cfg.days = static_cast<int>(num_or(d, "count", cfg.days));
    const std::string law = str_or(d, "law", "lognormal");
    if (law == "fixed")
      cfg.day_law.kind = DayLaw::Kind::Fixed;
    else if (law == "lognormal")
      cfg.day_law.kind = DayLaw::Kind::Lognormal;
    else
      bad("unknown day law '" + law + "'");
    cfg.day_law.sigma = num_or(d, "sigma", cfg.day_law.sigma);
  }
  if (j.contains("ladder")) {
    const json& l = j["ladder"];
    if (l.contains("sizes")) {
      cfg.ladder.clear();
      for (double s : need_vec(l, "sizes")) cfg.ladder.push_back(static_cast<int>(s));
    }
    cfg.ladder_replicates =
        static_cast<int>(num_or(l, "replicates", cfg.ladder_replicates));
  }
  cfg.dense_locations = static_cast<int>(num_or(j, "dense_locations", 512));
  if (j.contains("strategies")) {
    if (!j["strategies"].is_array()) bad("strategies must be an array");
    for (const auto& s : j["strategies"]) {
      if (!s.is_object() || !s.contains("density")) bad("strategy needs a density");
      cfg.strategies.emplace_back(str_or(s, "label", "strategy"),
                                  parse_density(s["density"]));
    }
  }
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_json(buf.str());
}

ExperimentConfig reference_experiment_config() {
  ExperimentConfig cfg;
  cfg.x_l = 0.0;
  cfg.x_r = 1.0;
  cfg.grid = TimeGrid{0.0, 24, 1.0};
  cfg.quad = QuadratureSpec::gauss(6, 6);

  const Density1D left = Density1D::truncated_gaussian_mixture({1.0}, {0.15}, {0.10}, 0.0, 1.0);
  const Density1D right = Density1D::truncated_gaussian_mixture({1.0}, {0.85}, {0.10}, 0.0, 1.0);
  const Density1D mixed = Density1D::uniform(0.0, 1.0);
  const Density1D v = Density1D::dirac(2.0);
  const ConditionalSchedule morning(
      Density1D::truncated_gaussian_mixture({1.0}, {8.0}, {1.0}, 4.0, 12.0));
  const ConditionalSchedule evening(
      Density1D::truncated_gaussian_mixture({1.0}, {17.5}, {1.2}, 13.0, 22.0));
  const ConditionalSchedule midday(
      Density1D::truncated_gaussian_mixture({1.0}, {13.0}, {1.5}, 8.0, 18.0));

  cfg.journeys = {
      JourneyTypeSpec{"LR", ScheduleVariant::StartingTime, v, left, right, morning},
      JourneyTypeSpec{"RL", ScheduleVariant::StartingTime, v, right, left, evening},
      JourneyTypeSpec{"RU", ScheduleVariant::StartingTime, v, right, mixed, evening},
      JourneyTypeSpec{"UL", ScheduleVariant::StartingTime, v, mixed, left, midday},
  };
  cfg.true_N = {150000.0, 120000.0, 30000.0, 40000.0};
  cfg.counters = CounterConfig{50, Density1D::uniform(0.0, 1.0), true};
  cfg.replicates = 1;
  cfg.generator = Generator::Poisson;
  cfg.master_seed = 20260823ULL;
  cfg.level = 0.95;
  cfg.days = 300;
  cfg.day_law = DayLaw{DayLaw::Kind::Lognormal, 0.1};
  cfg.ladder = {10, 20, 30, 40, 50};
  cfg.ladder_replicates = 40;
  cfg.dense_locations = 512;
  cfg.strategies = {
      {"uniform", Density1D::uniform(0.0, 1.0)},
      {"boundary", boundary_weighted_density()},
      {"center", center_weighted_density()},
  };
  return cfg;
}

std::vector<double> place_counters(const Density1D& density, int count, Rng& rng) {
  if (count < 1) throw DomainError("place_counters: count >= 1 required");
  std::vector<double> xs(static_cast<std::size_t>(count));
  for (double& x : xs) x = density.sample(rng);
  std::sort(xs.begin(), xs.end());
  return xs;
}

namespace {

Density1D power4_table(bool cosine, int n_knots) {
  if (n_knots < 3) throw DomainError("strategy density: need >= 3 knots");
  std::vector<double> knots(static_cast<std::size_t>(n_knots));
  std::vector<double> vals(static_cast<std::size_t>(n_knots));
  for (int q = 0; q < n_knots; ++q) {
    const double x = static_cast<double>(q) / (n_knots - 1);
    const double s = cosine ? std::cos(std::numbers::pi * x)
                            : std::sin(std::numbers::pi * x);
    knots[static_cast<std::size_t>(q)] = x;
    // Normalizing constant of cos^4/sin^4 on [0,1] is 3/8; the factory
    // renormalizes the trapezoid mass anyway.
    vals[static_cast<std::size_t>(q)] = 8.0 * s * s * s * s / 3.0;
  }
  return Density1D::piecewise_linear(std::move(knots), std::move(vals));
}

std::vector<double> dense_grid(const ExperimentConfig& cfg) {
  std::vector<double> xs(static_cast<std::size_t>(cfg.dense_locations));
  const double w = (cfg.x_r - cfg.x_l) / cfg.dense_locations;
  for (int q = 0; q < cfg.dense_locations; ++q)
    xs[static_cast<std::size_t>(q)] = cfg.x_l + (q + 0.5) * w;
  return xs;
}

enum : std::uint64_t {
  kSeedCounters = 1,
  kSeedTrips = 2,
  kSeedDaySizes = 3,
  kSeedLadder = 4,
};

std::vector<double> counters_for_replicate(const ExperimentConfig& cfg, int r) {
  const std::uint64_t idx =
      cfg.counters.resample_per_replicate ? static_cast<std::uint64_t>(r) : 0;
  Rng rng(derive_seed(cfg.master_seed, {kSeedCounters, idx}));
  return place_counters(cfg.counters.density, cfg.counters.count, rng);
}

// Per-day subpopulation sizes around the base values.
std::vector<double> day_sizes(const ExperimentConfig& cfg, int r, int d) {
  std::vector<double> nu = cfg.true_N;
  if (cfg.day_law.kind == DayLaw::Kind::Lognormal && cfg.day_law.sigma > 0.0) {
    Rng rng(derive_seed(cfg.master_seed,
                        {kSeedDaySizes, static_cast<std::uint64_t>(r),
                         static_cast<std::uint64_t>(d)}));
    const double s = cfg.day_law.sigma;
    for (double& v : nu) v *= std::exp(s * rng.normal() - 0.5 * s * s);
  }
  return nu;
}

json ellipsoid_json(const ConfidenceEllipsoid& e) {
  std::ostringstream os;
  e.write_json(os);
  return json::parse(os.str());
}

}  // namespace

Density1D boundary_weighted_density(int n_knots) { return power4_table(true, n_knots); }
Density1D center_weighted_density(int n_knots) { return power4_table(false, n_knots); }

// ---- commands ------------------------------------------------------------

void cmd_attendance(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  ensure_dir(out);
  Manifest m{"attendance", cfg.master_seed, {}};

  const std::vector<double> counters = counters_for_replicate(cfg, 0);
  const AttendanceTable at_counters =
      attendance_table(cfg.journeys, cfg.grid, counters, cfg.quad);
  write_file(out, "attendance_counters.csv", m,
             [&](std::ostream& os) { at_counters.write_csv(os); });

  const AttendanceTable dense =
      attendance_table(cfg.journeys, cfg.grid, dense_grid(cfg), cfg.quad);
  write_file(out, "attendance_dense.csv", m,
             [&](std::ostream& os) { dense.write_csv(os); });

  m.write(out);
}

void cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  ensure_dir(out);
  Manifest m{"simulate", cfg.master_seed, {}};
  char rel[128];

  for (int r = 0; r < cfg.replicates; ++r) {
    const std::vector<double> counters = counters_for_replicate(cfg, r);
    AttendanceTable table;
    if (cfg.generator == Generator::Poisson)
      table = attendance_table(cfg.journeys, cfg.grid, counters, cfg.quad);

    for (int d = 0; d < cfg.days; ++d) {
      const std::vector<double> nu = day_sizes(cfg, r, d);
      const std::uint64_t day_seed = derive_seed(
          cfg.master_seed, {kSeedTrips, static_cast<std::uint64_t>(r),
                            static_cast<std::uint64_t>(d)});
      CountDataset day;
      if (cfg.generator == Generator::Trajectory) {
        std::vector<long long> n(nu.size());
        for (std::size_t k = 0; k < nu.size(); ++k)
          n[k] = static_cast<long long>(std::llround(nu[k]));
        day = simulate_day(cfg.journeys, n, counters, cfg.grid, day_seed);
      } else {
        Rng rng(day_seed);
        day = simulate_poisson_day(table, nu, rng);
        day.n_trips.resize(nu.size());
        for (std::size_t k = 0; k < nu.size(); ++k)
          day.n_trips[k] = static_cast<long long>(std::llround(nu[k]));
        day.seed = day_seed;
      }
      day.day_id = d;
      std::snprintf(rel, sizeof(rel), "rep_%02d/day_%04d.csv", r, d);
      write_file(out, rel, m, [&](std::ostream& os) { day.write_csv(os, false); });
      std::snprintf(rel, sizeof(rel), "rep_%02d/day_%04d_hidden.csv", r, d);
      write_file(out, rel, m, [&](std::ostream& os) { day.write_csv(os, true); });
    }
  }
  m.write(out);
}

EstimateReport cmd_estimate(const ExperimentConfig& cfg,
                            const std::filesystem::path& counts_csv,
                            const std::filesystem::path& table_csv,
                            const std::filesystem::path& out) {
  cfg.validate();
  ensure_dir(out);
  Manifest m{"estimate", cfg.master_seed, {}};

  std::ifstream tis(table_csv);
  if (!tis) throw ConfigError("cannot open attendance table " + table_csv.string());
  const AttendanceTable table = AttendanceTable::read_csv(tis);
  std::ifstream cis(counts_csv);
  if (!cis) throw ConfigError("cannot open count dataset " + counts_csv.string());
  const CountDataset data = CountDataset::read_csv(cis);

  EstimateReport rep{run_em(table, data, cfg.em), 0.0,
                     FisherMatrix{}, ConfidenceEllipsoid{}};
  const std::vector<double> g = score(table, rep.em.nu, data);
  for (double v : g) rep.score_inf_norm = std::max(rep.score_inf_norm, std::fabs(v));

  write_file(out, "em_trace.csv", m,
             [&](std::ostream& os) { rep.em.write_trace_csv(os); });

  const PoissonModel model{cfg.journeys, table, cfg.counters.density, cfg.quad};
  rep.fisher = fisher_information(model, rep.em.nu, cfg.quad);
  Eigen::VectorXd center(static_cast<Eigen::Index>(rep.em.nu.size()));
  for (std::size_t k = 0; k < rep.em.nu.size(); ++k)
    center(static_cast<Eigen::Index>(k)) = rep.em.nu[k];
  rep.ellipsoid = confidence_ellipsoid(rep.fisher, center,
                                       static_cast<int>(table.J()), cfg.level);

  write_file(out, "fisher.json", m,
             [&](std::ostream& os) { rep.fisher.write_json(os); });
  write_file(out, "ellipsoid.json", m,
             [&](std::ostream& os) { rep.ellipsoid.write_json(os); });
  const std::size_t K = rep.em.nu.size();
  char rel[64];
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t k2 = k + 1; k2 < K; ++k2) {
      const EllipsoidSlice s = ellipsoid_slice(rep.ellipsoid, static_cast<int>(k),
                                               static_cast<int>(k2));
      std::snprintf(rel, sizeof(rel), "slice_%zu_%zu.csv", k + 1, k2 + 1);
      write_file(out, rel, m, [&](std::ostream& os) { s.write_boundary_csv(os); });
    }

  write_file(out, "estimate.json", m, [&](std::ostream& os) {
    json j;
    j["nu"] = rep.em.nu;
    j["log_likelihood"] = rep.em.ll_trace.back();
    j["iterations"] = rep.em.iterations;
    j["converged"] = rep.em.converged;
    j["score_inf_norm"] = rep.score_inf_norm;
    os << j.dump(2) << '\n';
  });
  m.write(out);
  return rep;
}

std::vector<ConsistencyRow> cmd_consistency(const ExperimentConfig& cfg,
                                            const std::filesystem::path& out) {
  cfg.validate();
  ensure_dir(out);
  Manifest m{"consistency", cfg.master_seed, {}};

  const std::size_t K = cfg.journeys.size();
  const int j_max = *std::max_element(cfg.ladder.begin(), cfg.ladder.end());
  const int R = cfg.ladder_replicates;

  // estimates[rung][k][r]
  std::vector<std::vector<std::vector<double>>> est(
      cfg.ladder.size(), std::vector<std::vector<double>>(K));

  for (int r = 0; r < R; ++r) {
    // Unsorted draws so the ladder rungs are nested prefixes of one pool.
    const std::uint64_t idx =
        cfg.counters.resample_per_replicate ? static_cast<std::uint64_t>(r) : 0;
    Rng crng(derive_seed(cfg.master_seed, {kSeedCounters, idx, kSeedLadder}));
    std::vector<double> pool(static_cast<std::size_t>(j_max));
    for (double& x : pool) x = cfg.counters.density.sample(crng);

    const AttendanceTable full =
        attendance_table(cfg.journeys, cfg.grid, pool, cfg.quad);
    Rng drng(derive_seed(cfg.master_seed,
                         {kSeedTrips, static_cast<std::uint64_t>(r), kSeedLadder}));
    const CountDataset full_day = simulate_poisson_day(full, cfg.true_N, drng);

    for (std::size_t rung = 0; rung < cfg.ladder.size(); ++rung) {
      const std::size_t J = static_cast<std::size_t>(cfg.ladder[rung]);
      AttendanceTable sub;
      sub.journey_labels = full.journey_labels;
      sub.grid = full.grid;
      sub.locations.assign(pool.begin(), pool.begin() + static_cast<long>(J));
      sub.values.assign(K * full.I() * J, 0.0);
      CountDataset day;
      day.locations = sub.locations;
      day.grid = full.grid;
      day.counts.assign(full.I() * J, 0);
      for (std::size_t i = 0; i < full.I(); ++i)
        for (std::size_t j = 0; j < J; ++j) {
          day.counts[i * J + j] = full_day.count(i, j);
          for (std::size_t k = 0; k < K; ++k)
            sub.at(k, i, j) = full.at(k, i, j);
        }
      const EmState s = run_em(sub, day, cfg.em);
      for (std::size_t k = 0; k < K; ++k) est[rung][k].push_back(s.nu[k]);
    }
  }

  auto quantile = [](std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
  };

  std::vector<ConsistencyRow> rows;
  for (std::size_t rung = 0; rung < cfg.ladder.size(); ++rung)
    for (std::size_t k = 0; k < K; ++k) {
      const std::vector<double>& e = est[rung][k];
      ConsistencyRow row;
      row.n_counters = cfg.ladder[rung];
      row.journey = cfg.journeys[k].label;
      row.q05 = quantile(e, 0.05);
      row.q25 = quantile(e, 0.25);
      row.q50 = quantile(e, 0.50);
      row.q75 = quantile(e, 0.75);
      row.q95 = quantile(e, 0.95);
      std::vector<double> rel;
      double sq = 0.0;
      for (double v : e) {
        const double d = v - cfg.true_N[k];
        rel.push_back(std::fabs(d) / cfg.true_N[k]);
        sq += d * d;
      }
      row.median_rel_error = quantile(rel, 0.50);
      row.rmse = std::sqrt(sq / static_cast<double>(e.size()));
      rows.push_back(row);
    }

  write_file(out, "consistency.csv", m, [&](std::ostream& os) {
    os << "J,journey,q05,q25,q50,q75,q95\n";
    for (const auto& row : rows)
      os << row.n_counters << ',' << row.journey << ',' << fmt17(row.q05) << ','
         << fmt17(row.q25) << ',' << fmt17(row.q50) << ',' << fmt17(row.q75)
         << ',' << fmt17(row.q95) << '\n';
  });
  write_file(out, "consistency_errors.csv", m, [&](std::ostream& os) {
    os << "J,journey,median_rel_error,rmse\n";
    for (const auto& row : rows)
      os << row.n_counters << ',' << row.journey << ','
         << fmt17(row.median_rel_error) << ',' << fmt17(row.rmse) << '\n';
  });
  m.write(out);
  return rows;
}

std::vector<StrategyReport> cmd_strategies(const ExperimentConfig& cfg,
                                           const std::filesystem::path& out) {
  cfg.validate();
  if (cfg.strategies.empty())
    throw ConfigError("config: 'strategies' must list at least one density");
  ensure_dir(out);
  Manifest m{"strategies", cfg.master_seed, {}};

  const std::size_t K = cfg.journeys.size();
  Eigen::VectorXd center(static_cast<Eigen::Index>(K));
  for (std::size_t k = 0; k < K; ++k)
    center(static_cast<Eigen::Index>(k)) = cfg.true_N[k];
  // The Fisher quadrature only needs the grid from the table.
  AttendanceTable grid_only;
  grid_only.grid = cfg.grid;

  std::vector<StrategyReport> reports;
  json summary = json::array();
  char rel[96];
  for (const auto& [label, density] : cfg.strategies) {
    PoissonModel model{cfg.journeys, grid_only, density, cfg.quad};
    const FisherMatrix fisher = fisher_information(model, cfg.true_N, cfg.quad);
    StrategyReport rep;
    rep.label = label;
    rep.ellipsoid =
        confidence_ellipsoid(fisher, center, cfg.counters.count, cfg.level);
    rep.shape_determinant = rep.ellipsoid.shape.determinant();
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t k2 = k + 1; k2 < K; ++k2) {
        const EllipsoidSlice s = ellipsoid_slice(rep.ellipsoid, static_cast<int>(k),
                                                 static_cast<int>(k2));
        rep.slice_areas.push_back(std::numbers::pi /
                                  std::sqrt(s.shape.determinant()));
        std::snprintf(rel, sizeof(rel), "%s_slice_%zu_%zu.csv", label.c_str(),
                      k + 1, k2 + 1);
        write_file(out, rel, m,
                   [&](std::ostream& os) { s.write_boundary_csv(os); });
      }
    json e = ellipsoid_json(rep.ellipsoid);
    e["label"] = label;
    e["shape_determinant"] = rep.shape_determinant;
    e["slice_areas"] = rep.slice_areas;
    summary.push_back(std::move(e));
    reports.push_back(std::move(rep));
  }

  write_file(out, "strategies.json", m,
             [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
  m.write(out);
  return reports;
}

std::vector<PdeCheckRow> cmd_pde_check(const ExperimentConfig& cfg,
                                       const std::filesystem::path& out) {
  cfg.validate();
  ensure_dir(out);
  Manifest m{"pde-check", cfg.master_seed, {}};

  const double span = cfg.x_r - cfg.x_l;
  const std::vector<double> points = {cfg.x_l + 0.35 * span, cfg.x_l + 0.5 * span,
                                      cfg.x_l + 0.65 * span};
  const double h = 0.02;

  std::vector<PdeCheckRow> rows;
  for (const auto& spec : cfg.journeys) {
    for (FluxDirection dir : {FluxDirection::Right, FluxDirection::Left}) {
      // Evaluate near the flux peak so the residual scale is meaningful:
      // take the three busiest bins at mid-domain.
      const double x_mid = cfg.x_l + 0.5 * span;
      std::vector<std::pair<double, int>> load;
      const std::vector<double> a = attendance(spec, cfg.grid, x_mid, cfg.quad);
      for (int i = 0; i < cfg.grid.n_steps; ++i)
        load.emplace_back(a[static_cast<std::size_t>(i)], i);
      std::sort(load.rbegin(), load.rend());
      std::vector<double> times;
      for (int q = 0; q < 3 && q < static_cast<int>(load.size()); ++q)
        times.push_back(0.5 * (cfg.grid.bin_lo(load[static_cast<std::size_t>(q)].second) +
                               cfg.grid.bin_hi(load[static_cast<std::size_t>(q)].second)));

      const double r_2h = pde_residual(spec, dir, times, points, 2.0 * h, cfg.quad);
      const double r_h = pde_residual(spec, dir, times, points, h, cfg.quad);
      PdeCheckRow row;
      row.journey = spec.label;
      row.direction = dir == FluxDirection::Right ? "right" : "left";
      row.h = h;
      row.residual = r_h;
      row.ratio = r_h > 0.0 ? r_2h / r_h : 0.0;
      rows.push_back(row);
    }
  }

  write_file(out, "pde_check.csv", m, [&](std::ostream& os) {
    os << "journey,direction,h,residual,ratio\n";
    for (const auto& row : rows)
      os << row.journey << ',' << row.direction << ',' << fmt17(row.h) << ','
         << fmt17(row.residual) << ',' << fmt17(row.ratio) << '\n';
  });
  m.write(out);
  return rows;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot hash missing file " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    const std::streamsize n = is.gcount();
    for (std::streamsize q = 0; q < n; ++q) {
      h ^= static_cast<unsigned char>(buf[q]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace mobcount

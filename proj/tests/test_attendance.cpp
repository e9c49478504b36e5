#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "mobcount/experiments.hpp"

using namespace mobcount;

namespace {

const QuadratureSpec kQuad = QuadratureSpec::gauss(8, 8);

JourneyTypeSpec smooth_starting_spec() {
  return JourneyTypeSpec{
      "S", ScheduleVariant::StartingTime, Density1D::dirac(2.0),
      Density1D::truncated_gaussian_mixture({1.0}, {0.2}, {0.1}, 0.0, 1.0),
      Density1D::truncated_gaussian_mixture({1.0}, {0.8}, {0.1}, 0.0, 1.0),
      ConditionalSchedule(
          Density1D::truncated_gaussian_mixture({1.0}, {8.0}, {1.0}, 4.0, 12.0))};
}

JourneyTypeSpec smooth_arrival_spec() {
  return JourneyTypeSpec{
      "A", ScheduleVariant::ArrivalTime, Density1D::dirac(2.0),
      Density1D::truncated_gaussian_mixture({1.0}, {0.8}, {0.1}, 0.0, 1.0),
      Density1D::truncated_gaussian_mixture({1.0}, {0.2}, {0.1}, 0.0, 1.0),
      ConditionalSchedule(
          Density1D::truncated_gaussian_mixture({1.0}, {18.0}, {1.0}, 14.0, 22.0))};
}

}  // namespace

TEST_CASE("directionality kernel g_x") {
  JourneyTypeSpec s = smooth_starting_spec();
  s.destination = Density1D::uniform(0.0, 1.0);
  CHECK(g_x(s, 0.5, 0.2) == 0.5);       // S(0.5)
  CHECK(g_x(s, 0.5, 0.5) == 0.5);       // u = x takes the F branch
  CHECK(g_x(s, 0.5, 0.8) == 0.5);       // F(0.5)
  s.destination = Density1D::uniform(0.6, 1.0);  // all mass right of 0.5
  CHECK(g_x(s, 0.5, 0.2) == 1.0);
  s.variant = ScheduleVariant::ArrivalTime;
  CHECK_THROWS_AS(g_x(s, 0.5, 0.2), DomainError);
}

TEST_CASE("rightward flux: hand-evaluated all-Dirac case") {
  // v = 2 Dirac, origin Dirac at 0.1, schedule Uniform(6,10), destination with
  // S(0.5) = 0.4.  flux_right(8, 0.5) = 0.4 * f_t0(8 - 0.4/2) = 0.4 * 0.25.
  const JourneyTypeSpec s{
      "D", ScheduleVariant::StartingTime, Density1D::dirac(2.0),
      Density1D::dirac(0.1), Density1D::uniform(0.2, 0.7),
      ConditionalSchedule(Density1D::uniform(6.0, 10.0))};
  CHECK(s.destination.survival(0.5) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(flux_right(s, 8.0, 0.5, kQuad) == doctest::Approx(0.1).epsilon(1e-12));
  // Leftward flux needs an origin right of x; the Dirac origin at 0.1 < x
  // contributes nothing.
  CHECK(flux_left(s, 8.0, 0.5, kQuad) == 0.0);
}

TEST_CASE("oriented flux annihilation and early times") {
  JourneyTypeSpec s = smooth_starting_spec();
  s.destination = Density1D::uniform(0.6, 1.0);  // F(0.5) = 0
  for (double t : {6.0, 8.0, 10.0}) CHECK(flux_left(s, t, 0.5, kQuad) == 0.0);
  // Before the earliest possible departure there is no flux anywhere.
  s = smooth_starting_spec();
  CHECK(flux_right(s, 3.0, 0.5, kQuad) == 0.0);
  CHECK(flux_unoriented(s, 3.0, 0.5, kQuad) == 0.0);
}

TEST_CASE("unoriented flux decomposes into oriented parts") {
  for (const JourneyTypeSpec& s : {smooth_starting_spec(), smooth_arrival_spec()}) {
    Rng rng(2024);
    double worst = 0.0;
    for (int q = 0; q < 100; ++q) {
      const double t = rng.uniform(4.0, 22.0);
      const double x = rng.uniform(0.02, 0.98);
      const double whole = flux_unoriented(s, t, x, kQuad);
      const double parts = flux_right(s, t, x, kQuad) + flux_left(s, t, x, kQuad);
      worst = std::max(worst, std::fabs(whole - parts));
      CHECK(whole >= 0.0);
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("symmetric problem doubles the rightward flux at the center") {
  const JourneyTypeSpec s{
      "sym", ScheduleVariant::StartingTime, Density1D::dirac(1.0),
      Density1D::truncated_gaussian_mixture({0.5, 0.5}, {0.3, 0.7}, {0.05, 0.05},
                                            0.0, 1.0),
      Density1D::truncated_gaussian_mixture({0.5, 0.5}, {0.3, 0.7}, {0.05, 0.05},
                                            0.0, 1.0),
      ConditionalSchedule(Density1D::uniform(6.0, 10.0))};
  for (double t : {7.0, 8.0, 9.0}) {
    const double whole = flux_unoriented(s, t, 0.5, kQuad);
    const double right = flux_right(s, t, 0.5, kQuad);
    CHECK(whole == doctest::Approx(2.0 * right).epsilon(1e-10));
  }
}

TEST_CASE("mirror symmetry maps rightward to leftward flux") {
  // Mirroring space about 0.5 and swapping origin/destination parameters
  // turns rightward flux at x into leftward flux at 1 - x.
  const JourneyTypeSpec s = smooth_starting_spec();
  const JourneyTypeSpec mirrored{
      "M", ScheduleVariant::StartingTime, s.velocity,
      Density1D::truncated_gaussian_mixture({1.0}, {0.8}, {0.1}, 0.0, 1.0),
      Density1D::truncated_gaussian_mixture({1.0}, {0.2}, {0.1}, 0.0, 1.0),
      s.schedule};
  for (double t : {7.5, 8.0, 9.0})
    for (double x : {0.3, 0.53, 0.7})
      CHECK(flux_right(s, t, x, kQuad) ==
            doctest::Approx(flux_left(mirrored, t, 1.0 - x, kQuad)).epsilon(1e-12));
}

TEST_CASE("attendance sums to at most one over a full-day grid") {
  const TimeGrid grid{0.0, 24, 1.0};
  for (const JourneyTypeSpec& s : {smooth_starting_spec(), smooth_arrival_spec()})
    for (double x : {0.1, 0.5, 0.9}) {
      const std::vector<double> a = attendance(s, grid, x, kQuad);
      double sum = 0.0;
      for (double v : a) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        sum += v;
      }
      CHECK(sum <= 1.0 + 1e-6);
    }
}

TEST_CASE("attendance agrees with Monte Carlo trip counting") {
  const JourneyTypeSpec s = smooth_starting_spec();
  const TimeGrid grid{0.0, 24, 1.0};
  const std::vector<double> probes = {0.15, 0.35, 0.53, 0.7, 0.9};
  const long long n = 200000;
  const CountDataset mc = simulate_day({s}, {n}, probes, grid, 314159);
  int bad = 0, cells = 0;
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const std::vector<double> a = attendance(s, grid, probes[j], kQuad);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double p = a[i];
      const double sigma = std::sqrt(std::max(p * (1.0 - p) / n, 1e-12 / n));
      const double emp = static_cast<double>(mc.hid(0, i, j)) / n;
      ++cells;
      if (std::fabs(emp - p) >= 4.0 * sigma) ++bad;
    }
  }
  CHECK(static_cast<double>(bad) / cells <= 0.01);
}

TEST_CASE("attendance table reduces to attendance and is deterministic") {
  const JourneyTypeSpec s = smooth_starting_spec();
  const TimeGrid grid{0.0, 24, 1.0};
  const AttendanceTable t1 = attendance_table({s}, grid, {0.53}, kQuad);
  const std::vector<double> col = attendance(s, grid, 0.53, kQuad);
  REQUIRE(t1.K() == 1);
  REQUIRE(t1.J() == 1);
  for (std::size_t i = 0; i < t1.I(); ++i) CHECK(t1.at(0, i, 0) == col[i]);

  const AttendanceTable t2 = attendance_table({s}, grid, {0.53}, kQuad);
  const AttendanceTable t3 = attendance_table_serial({s}, grid, {0.53}, kQuad);
  CHECK(t1.values == t2.values);  // bit-identical re-run
  CHECK(t1.values == t3.values);  // parallel kernel equals serial reference
}

TEST_CASE("reference setup: morning peak and linearly independent rows") {
  const ExperimentConfig cfg = reference_experiment_config();
  // Commuter journey LR peaks at x = 0.53 in the bin containing 8 a.m.
  const std::vector<double> lr = attendance(cfg.journeys[0], cfg.grid, 0.53, cfg.quad);
  std::size_t peak = 0;
  for (std::size_t i = 1; i < lr.size(); ++i)
    if (lr[i] > lr[peak]) peak = i;
  CHECK(peak == 8);
  double morning = 0.0, total = 0.0;
  for (std::size_t i = 0; i < lr.size(); ++i) {
    total += lr[i];
    if (i >= 6 && i <= 11) morning += lr[i];
  }
  CHECK(morning / total > 0.9);

  // Gram matrix of the rows a_k over all (i, j) cells is positive definite.
  Rng rng(derive_seed(cfg.master_seed, {1, 0}));
  const std::vector<double> counters =
      place_counters(cfg.counters.density, cfg.counters.count, rng);
  const AttendanceTable table =
      attendance_table(cfg.journeys, cfg.grid, counters, cfg.quad);
  const std::size_t K = table.K();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(K, K);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t k2 = 0; k2 < K; ++k2) {
      double s = 0.0;
      for (std::size_t i = 0; i < table.I(); ++i)
        for (std::size_t j = 0; j < table.J(); ++j)
          s += table.at(k, i, j) * table.at(k2, i, j);
      gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k2)) = s;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("attendance csv round-trips losslessly") {
  const ExperimentConfig cfg = reference_experiment_config();
  const AttendanceTable t = attendance_table(
      cfg.journeys, TimeGrid{0.0, 6, 1.0}, {0.25, 0.53}, QuadratureSpec::gauss(4, 4));
  std::stringstream ss;
  t.write_csv(ss);
  const AttendanceTable back = AttendanceTable::read_csv(ss);
  REQUIRE(back.K() == t.K());
  REQUIRE(back.J() == t.J());
  CHECK(back.values == t.values);
  CHECK(back.locations == t.locations);
  CHECK(back.journey_labels == t.journey_labels);

  std::stringstream bad("journey,time_step,location,value\nLR,0,not_a_number\n");
  CHECK_THROWS_AS(AttendanceTable::read_csv(bad), ParseError);
}

TEST_CASE("transport-equation residual decays at second order") {
  const std::vector<double> points = {0.4, 0.5, 0.6};
  for (const JourneyTypeSpec& s : {smooth_starting_spec(), smooth_arrival_spec()}) {
    const std::vector<double> times =
        s.variant == ScheduleVariant::StartingTime
            ? std::vector<double>{7.5, 8.0, 8.5}
            : std::vector<double>{17.0, 17.5, 18.0};
    for (FluxDirection dir : {FluxDirection::Right, FluxDirection::Left}) {
      const double r2 = pde_residual(s, dir, times, points, 0.04, kQuad);
      const double r1 = pde_residual(s, dir, times, points, 0.02, kQuad);
      CHECK(r1 > 0.0);
      CHECK(r2 / r1 > 3.5);
      CHECK(r2 / r1 < 4.5);
    }
  }
}

TEST_CASE("pde residual guards its preconditions") {
  JourneyTypeSpec s = smooth_starting_spec();
  // Destination survival vanishes at x = 0.999... with all mass left of it.
  s.destination = Density1D::truncated_gaussian_mixture({1.0}, {0.2}, {0.05}, 0.0, 0.5);
  CHECK_THROWS_AS(pde_residual(s, FluxDirection::Right, {8.0}, {0.9}, 0.01, kQuad),
                  SingularRisk);
  s = smooth_starting_spec();
  s.velocity = Density1D::uniform(1.0, 2.0);
  CHECK_THROWS_AS(pde_residual(s, FluxDirection::Right, {8.0}, {0.5}, 0.01, kQuad),
                  DomainError);
}
